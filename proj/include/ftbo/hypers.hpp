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
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "ftbo/curves.hpp"
#include "ftbo/ftgp.hpp"
#include "ftbo/linalg.hpp"
#include "ftbo/slice_sampler.hpp"

namespace ftbo {

/// Hyperpriors: lognormal on the Matern amplitude, the warp shapes and the
/// decay kernel's alpha and beta; uniform on length scales; horseshoe on the
/// noise variance; uniform over the observed loss range on the prior mean.
struct HyperPriorSpec {
  double lognormal_location = 0.0;
  double lognormal_scale = 1.0;
  double length_scale_max = 10.0;
  double horseshoe_scale = 0.1;
};

using HyperSample = Hypers;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_lognormal(double x, double location, double scale) {
  if (!(x > 0.0) || !std::isfinite(x)) return kNegInf;
  const double z = (std::log(x) - location) / scale;
  return -std::log(x) - std::log(scale * std::sqrt(2.0 * std::numbers::pi)) - 0.5 * z * z;
}

inline double log_uniform(double x, double lower, double upper) {
  if (!(x > lower && x <= upper)) return kNegInf;
  return -std::log(upper - lower);
}

// The horseshoe density has no closed form; this is the usual surrogate
// log(log(1 + (scale / x)^2)), up to a constant.
inline double log_horseshoe(double x, double scale) {
  if (!(x > 0.0) || !std::isfinite(x)) return kNegInf;
  return std::log(std::log1p((scale / x) * (scale / x)));
}

inline double log_prior(const Hypers& h, const HyperPriorSpec& spec,
                        std::pair<double, double> y_bounds) {
  const double loc = spec.lognormal_location, sc = spec.lognormal_scale;
  double lp = log_lognormal(h.space.amplitude, loc, sc);
  for (Eigen::Index d = 0; d < h.space.dim(); ++d) {
    lp += log_uniform(h.space.length_scales(d), 0.0, spec.length_scale_max);
    lp += log_lognormal(h.space.warp_a(d), loc, sc);
    lp += log_lognormal(h.space.warp_b(d), loc, sc);
  }
  lp += log_lognormal(h.curve.alpha, loc, sc);
  lp += log_lognormal(h.curve.beta, loc, sc);
  lp += log_horseshoe(h.curve.noise_var, spec.horseshoe_scale);
  const auto [lo, hi] = y_bounds;
  if (lo < hi) {
    lp += (h.space.mean >= lo && h.space.mean <= hi) ? -std::log(hi - lo) : kNegInf;
  } else if (h.space.mean != lo) {
    lp = kNegInf;
  }
  return std::isnan(lp) ? kNegInf : lp;
}

/// Starting point of a chain: the prior medians, with the mean at the
/// average observed loss.
inline Hypers initial_hypers(Eigen::Index dim, double mean = 0.0) {
  Hypers h;
  h.space = WarpedMaternParams::unwarped(dim, 5.0);
  h.space.amplitude = 1.0;
  h.space.mean = mean;
  h.curve = {1.0, 1.0, 0.01};
  return h;
}

// Range the prior mean may take; a single distinct loss value gets a small
// symmetric pad so the uniform prior stays proper.
inline std::pair<double, double> mean_bounds(const CurveSet& data) {
  auto b = data.y_bounds();
  if (!b) return {0.0, 0.0};
  auto [lo, hi] = *b;
  if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(lo)))) {
    const double pad = 1e-3 * std::max(1.0, std::abs(lo));
    lo -= pad;
    hi += pad;
  }
  return {lo, hi};
}

/// Which coordinates a chain updates. Positive parameters are sampled as
/// their logarithm.
struct ChainLayout {
  bool curve_shape = true;  // alpha, beta
  bool noise = true;
  bool mean = true;
};

namespace detail {

struct Coordinate {
  std::function<double&(Hypers&)> ref;
  bool log_scale = true;
  double width = 1.0;
};

inline std::vector<Coordinate> coordinates(Eigen::Index dim, const ChainLayout& layout, double mean_width) {
  std::vector<Coordinate> out;
  out.push_back({[](Hypers& h) -> double& { return h.space.amplitude; }});
  for (Eigen::Index d = 0; d < dim; ++d) {
    out.push_back({[d](Hypers& h) -> double& { return h.space.length_scales(d); }});
    out.push_back({[d](Hypers& h) -> double& { return h.space.warp_a(d); }});
    out.push_back({[d](Hypers& h) -> double& { return h.space.warp_b(d); }});
  }
  if (layout.curve_shape) {
    out.push_back({[](Hypers& h) -> double& { return h.curve.alpha; }});
    out.push_back({[](Hypers& h) -> double& { return h.curve.beta; }});
  }
  if (layout.noise) out.push_back({[](Hypers& h) -> double& { return h.curve.noise_var; }});
  if (layout.mean) out.push_back({[](Hypers& h) -> double& { return h.space.mean; }, false, mean_width});
  return out;
}

}  // namespace detail

struct ChainOptions {
  int n_samples = 10;
  int burn_in = 50;
  int thin = 1;
};

/// Runs a coordinate-wise slice-sampling chain over the hyperparameters with
/// target log_likelihood(h) + log_prior(h). A coordinate update that fails
/// (likelihood not computable, shrinkage exhausted) keeps its old value.
template <typename LogLikelihood, typename Rng>
std::vector<Hypers> run_hyper_chain(Hypers state, LogLikelihood&& log_likelihood,
                                    const HyperPriorSpec& spec, std::pair<double, double> y_bounds,
                                    const ChainLayout& layout, const ChainOptions& opts, Rng& rng) {
  if (opts.n_samples < 1 || opts.burn_in < 0 || opts.thin < 1) {
    throw std::invalid_argument("run_hyper_chain: need n_samples >= 1, burn_in >= 0, thin >= 1");
  }
  const double mean_width = std::max(y_bounds.second - y_bounds.first, 1e-6);
  auto coords = detail::coordinates(state.space.dim(), layout, mean_width);

  auto log_joint = [&](const Hypers& h) {
    const double lp = log_prior(h, spec, y_bounds);
    if (!std::isfinite(lp)) return kNegInf;
    try {
      const double ll = log_likelihood(h);
      return std::isfinite(ll) ? lp + ll : kNegInf;
    } catch (const CholeskyError&) {
      return kNegInf;
    } catch (const std::invalid_argument&) {
      return kNegInf;
    }
  };

  if (!std::isfinite(log_joint(state))) {
    throw std::invalid_argument("run_hyper_chain: initial hyperparameters have zero posterior density");
  }

  auto sweep = [&] {
    for (auto& c : coords) {
      Hypers trial = state;
      double& slot = c.ref(trial);
      auto target = [&](double u) {
        slot = c.log_scale ? std::exp(u) : u;
        const double lj = log_joint(trial);
        return c.log_scale ? lj + u : lj;
      };
      const double start = c.log_scale ? std::log(c.ref(state)) : c.ref(state);
      try {
        const double next = slice_sample_step(start, target, c.width, rng);
        c.ref(state) = c.log_scale ? std::exp(next) : next;
      } catch (const SliceSamplerError&) {
      }
    }
  };

  for (int i = 0; i < opts.burn_in; ++i) sweep();
  std::vector<Hypers> samples;
  samples.reserve(std::size_t(opts.n_samples));
  for (int s = 0; s < opts.n_samples; ++s) {
    for (int i = 0; i < opts.thin; ++i) sweep();
    samples.push_back(state);
  }
  return samples;
}

/// Posterior samples of the freeze-thaw model's hyperparameters. With no
/// observations the likelihood is flat and the prior mean is held fixed.
template <typename Rng>
std::vector<Hypers> sample_hypers(const CurveSet& data, const HyperPriorSpec& spec, int n_samples,
                                  int burn_in, Rng& rng, std::optional<Hypers> start = std::nullopt,
                                  int thin = 1) {
  const bool has_data = data.total_observations() > 0;
  Hypers init = start ? *start : initial_hypers(data.dim(), data.mean_observation());
  const auto bounds = has_data ? mean_bounds(data) : std::pair{init.space.mean, init.space.mean};
  if (has_data) init.space.mean = std::clamp(init.space.mean, bounds.first, bounds.second);
  ChainLayout layout;
  layout.mean = has_data;
  MarginalLikelihood lml(data);
  return run_hyper_chain(init, lml, spec, bounds, layout, ChainOptions{n_samples, burn_in, thin}, rng);
}

}  // namespace ftbo
