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
#include <random>
#include <vector>

#include "ftbo/curves.hpp"
#include "ftbo/ftgp.hpp"
#include "ftbo/linalg.hpp"

namespace ftbo::testing {

inline Hypers random_hypers(std::mt19937_64& rng, Eigen::Index dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Hypers h;
  h.space = WarpedMaternParams::unwarped(dim);
  h.space.amplitude = 0.5 + u(rng);
  for (Eigen::Index d = 0; d < dim; ++d) {
    h.space.length_scales(d) = 0.2 + 0.8 * u(rng);
    h.space.warp_a(d) = 0.5 + 1.5 * u(rng);
    h.space.warp_b(d) = 0.5 + 1.5 * u(rng);
  }
  h.space.mean = 0.5 * u(rng);
  h.curve.alpha = 0.7 + 1.3 * u(rng);
  h.curve.beta = 0.5 + 1.5 * u(rng);
  h.curve.noise_var = 0.005 + 0.05 * u(rng);
  return h;
}

// n curves with lengths drawn from {0..max_t} (at least one observed),
// losses decaying towards a config-dependent level.
inline CurveSet random_curves(std::mt19937_64& rng, std::size_t n, Eigen::Index max_t,
                              Eigen::Index dim = 2, bool allow_empty = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  CurveSet data(dim);
  for (std::size_t i = 0; i < n; ++i) {
    VectorXd x(dim);
    for (Eigen::Index d = 0; d < dim; ++d) x(d) = u(rng);
    Eigen::Index t = (i == 0) ? max_t
                              : Eigen::Index(std::uniform_int_distribution<int>(allow_empty ? 0 : 1, int(max_t))(rng));
    const double level = x.sum() / double(dim);
    const double rate = 0.1 + 0.5 * u(rng);
    std::vector<double> y;
    for (Eigen::Index e = 1; e <= t; ++e) y.push_back(level + std::exp(-rate * double(e)) + noise(rng));
    data.add_curve(ConfigId(i), x, y);
  }
  return data;
}

// Draws curves from the generative model itself: f ~ GP(m, K_x) over the
// configs, then y_n = f_n + g_n(t) + noise with g_n from the decay kernel.
inline CurveSet sample_from_model(std::mt19937_64& rng, const Hypers& h, std::size_t n,
                                  Eigen::Index epochs) {
  const auto dim = h.space.dim();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Points xs;
  for (std::size_t i = 0; i < n; ++i) xs.push_back(VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return u(rng); }));
  const MatrixXd lx = psd_sqrt(hyper_gram(xs, h.space));
  const VectorXd f = VectorXd::Constant(Eigen::Index(n), h.space.mean) +
                     lx * VectorXd::NullaryExpr(Eigen::Index(n), [&](Eigen::Index) { return z(rng); });
  const MatrixXd lt = psd_sqrt(epoch_gram(epochs, h.curve));
  CurveSet data(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const VectorXd y = f(Eigen::Index(i)) + (lt * VectorXd::NullaryExpr(epochs, [&](Eigen::Index) { return z(rng); })).array();
    data.add_curve(ConfigId(i), xs[i], std::vector<double>(y.data(), y.data() + y.size()));
  }
  return data;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

template <typename A, typename B>
double rel_err_norm(const A& a, const B& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

}  // namespace ftbo::testing
