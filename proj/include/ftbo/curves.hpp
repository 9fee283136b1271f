// Copyright 2026 The ftbo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace ftbo {

using ConfigId = std::int64_t;

/// One hyperparameter configuration (in unit coordinates) and its training
/// curve; y[i] is the loss after epoch i + 1.
struct Curve {
  ConfigId id = 0;
  Eigen::VectorXd x;
  std::vector<double> y;

  Eigen::Index epochs() const { return static_cast<Eigen::Index>(y.size()); }
};

class CurveSet {
 public:
  CurveSet() = default;
  explicit CurveSet(Eigen::Index dim) : dim_(dim) {}

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return curves_.size(); }
  bool empty() const { return curves_.empty(); }

  const std::vector<Curve>& curves() const { return curves_; }
  const Curve& operator[](std::size_t i) const { return curves_.at(i); }

  std::optional<std::size_t> index_of(ConfigId id) const {
    for (std::size_t i = 0; i < curves_.size(); ++i)
      if (curves_[i].id == id) return i;
    return std::nullopt;
  }

  std::size_t add_config(ConfigId id, Eigen::VectorXd x) {
    if (x.size() != dim_) {
      throw std::invalid_argument("CurveSet: point has dimension " + std::to_string(x.size()) +
                                  ", expected " + std::to_string(dim_));
    }
    if (!x.allFinite() || (dim_ > 0 && (x.minCoeff() < 0.0 || x.maxCoeff() > 1.0))) {
      throw std::invalid_argument("CurveSet: point outside the unit hypercube");
    }
    if (index_of(id)) {
      throw std::invalid_argument("CurveSet: duplicate config id " + std::to_string(id));
    }
    curves_.push_back(Curve{id, std::move(x), {}});
    return curves_.size() - 1;
  }

  std::size_t add_curve(ConfigId id, Eigen::VectorXd x, std::vector<double> y) {
    for (double v : y)
      if (!std::isfinite(v)) throw std::invalid_argument("CurveSet: non-finite loss");
    const auto i = add_config(id, std::move(x));
    curves_[i].y = std::move(y);
    return i;
  }

  void append(std::size_t index, double loss) {
    if (!std::isfinite(loss)) throw std::invalid_argument("CurveSet: non-finite loss");
    curves_.at(index).y.push_back(loss);
  }

  std::size_t total_observations() const {
    std::size_t n = 0;
    for (const auto& c : curves_) n += c.y.size();
    return n;
  }

  Eigen::Index max_epochs() const {
    Eigen::Index t = 0;
    for (const auto& c : curves_) t = std::max(t, c.epochs());
    return t;
  }

  std::optional<std::pair<double, double>> y_bounds() const {
    std::optional<std::pair<double, double>> out;
    for (const auto& c : curves_) {
      for (double v : c.y) {
        if (!out) out = std::pair{v, v};
        out->first = std::min(out->first, v);
        out->second = std::max(out->second, v);
      }
    }
    return out;
  }

  double mean_observation() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : curves_)
      for (double v : c.y) sum += v, ++n;
    return n ? sum / double(n) : 0.0;
  }

 private:
  Eigen::Index dim_ = 0;
  std::vector<Curve> curves_;
};

}  // namespace ftbo
