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
#include <random>
#include <stdexcept>

namespace ftbo {

class SliceSamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxShrinkSteps = 1000;
inline constexpr int kMaxStepOut = 50;

/// One univariate slice-sampling update (step-out, then shrinkage).
/// log_target may return -inf outside its support.
template <typename LogTarget, typename Rng>
double slice_sample_step(double current, LogTarget&& log_target, double width, Rng& rng) {
  if (!(width > 0.0) || !std::isfinite(width)) {
    throw std::invalid_argument("slice_sample_step: width must be positive");
  }
  const double log_fx = log_target(current);
  if (!std::isfinite(log_fx)) {
    throw std::invalid_argument("slice_sample_step: log target is not finite at the current point");
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double log_level = log_fx + std::log(unif(rng));

  double lower = current - width * unif(rng);
  double upper = lower + width;
  for (int i = 0; i < kMaxStepOut && log_target(lower) > log_level; ++i) lower -= width;
  for (int i = 0; i < kMaxStepOut && log_target(upper) > log_level; ++i) upper += width;

  for (int i = 0; i < kMaxShrinkSteps; ++i) {
    const double proposal = lower + (upper - lower) * unif(rng);
    if (log_target(proposal) > log_level) return proposal;
    if (proposal < current) {
      lower = proposal;
    } else {
      upper = proposal;
    }
  }
  throw SliceSamplerError("slice_sample_step: shrinkage did not find a point on the slice");
}

}  // namespace ftbo
