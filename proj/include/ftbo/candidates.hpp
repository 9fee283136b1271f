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

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>

#include <boost/random/sobol.hpp>

#include "ftbo/kernels.hpp"

namespace ftbo {

inline constexpr std::size_t kDefaultPoolSize = 1000;

/// n points of a Sobol sequence in [0,1]^dim under a random toroidal shift
/// drawn from rng, so every round sees a fresh but still low-discrepancy set.
template <typename Rng>
Points sobol_pool(Eigen::Index dim, std::size_t n, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("sobol_pool: dim must be positive");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd shift(dim);
  for (Eigen::Index d = 0; d < dim; ++d) shift(d) = u(rng);
  boost::random::sobol qrng(static_cast<std::size_t>(dim));
  Points pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    VectorXd x(dim);
    for (Eigen::Index d = 0; d < dim; ++d) {
      const double v = std::ldexp(static_cast<double>(qrng()), -64) + shift(d);
      x(d) = std::min(v - std::floor(v), 1.0);
    }
    pool.push_back(std::move(x));
  }
  return pool;
}

}  // namespace ftbo
