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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/beta.hpp>

namespace ftbo {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Points = std::vector<VectorXd>;

/// Shape of the exponential-decay curve kernel. The kernel is the Laplace
/// transform of a Gamma(alpha, rate = beta) mixing density over decay rates,
/// plus independent observation noise.
struct ExpDecayParams {
  double alpha = 1.0;
  double beta = 1.0;
  double noise_var = 0.0;

  void validate() const {
    if (!(std::isfinite(alpha) && alpha > 0.0) ||
        !(std::isfinite(beta) && beta > 0.0) ||
        !(std::isfinite(noise_var) && noise_var >= 0.0)) {
      throw std::invalid_argument("ExpDecayParams: need alpha > 0, beta > 0, noise_var >= 0");
    }
  }
};

/// Ornstein-Uhlenbeck term, only used when simulating curves.
struct OuParams {
  double variance = 0.01;
  double length = 5.0;

  void validate() const {
    if (!(std::isfinite(variance) && variance > 0.0) ||
        !(std::isfinite(length) && length > 0.0)) {
      throw std::invalid_argument("OuParams: variance and length must be positive");
    }
  }
};

/// Matern-5/2 over Beta-CDF warped inputs in the unit hypercube, with a
/// constant prior mean.
struct WarpedMaternParams {
  double amplitude = 1.0;
  VectorXd length_scales;
  VectorXd warp_a;
  VectorXd warp_b;
  double mean = 0.0;

  static WarpedMaternParams unwarped(Eigen::Index dim, double length = 1.0) {
    WarpedMaternParams p;
    p.length_scales = VectorXd::Constant(dim, length);
    p.warp_a = VectorXd::Ones(dim);
    p.warp_b = VectorXd::Ones(dim);
    return p;
  }

  Eigen::Index dim() const { return length_scales.size(); }

  void validate() const {
    const auto d = length_scales.size();
    if (warp_a.size() != d || warp_b.size() != d) {
      throw std::invalid_argument("WarpedMaternParams: vector lengths differ");
    }
    if (!(std::isfinite(amplitude) && amplitude > 0.0) || !std::isfinite(mean)) {
      throw std::invalid_argument("WarpedMaternParams: bad amplitude or mean");
    }
    auto positive = [](const VectorXd& v) {
      return v.allFinite() && (v.size() == 0 || v.minCoeff() > 0.0);
    };
    if (!positive(length_scales) || !positive(warp_a) || !positive(warp_b)) {
      throw std::invalid_argument("WarpedMaternParams: shapes and scales must be positive");
    }
  }
};

// ---------------------------------------------------------------------------
// Exponential-decay kernel

inline double exp_decay_cov(double t, double t_prime, const ExpDecayParams& p,
                            bool same_index = false) {
  if (!std::isfinite(t) || !std::isfinite(t_prime) || t < 0.0 || t_prime < 0.0) {
    throw std::invalid_argument("exp_decay_cov: times must be finite and non-negative");
  }
  const double k = std::pow(p.beta / (t + t_prime + p.beta), p.alpha);
  return same_index ? k + p.noise_var : k;
}

namespace detail {

// Golub-Welsch nodes and normalized weights for the generalized Laguerre
// weight u^shape e^{-u}; weights sum to one.
struct LaguerreRule {
  VectorXd nodes;
  VectorXd weights;
};

inline LaguerreRule generalized_laguerre(int n, double shape) {
  MatrixXd jacobi = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    jacobi(i, i) = 2.0 * i + shape + 1.0;
    if (i + 1 < n) {
      const double off = std::sqrt((i + 1.0) * (i + 1.0 + shape));
      jacobi(i, i + 1) = off;
      jacobi(i + 1, i) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(jacobi);
  LaguerreRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = eig.eigenvectors().row(0).transpose().array().square();
  return rule;
}

}  // namespace detail

/// Numerically integrates the gamma mixture of exponentials that the closed
/// form above evaluates, without using the closed form. After rescaling
/// lambda = u / (beta + s/2), s = t + t', the integrand against the
/// u^{alpha-1} e^{-u} weight is the smooth factor exp(-u s / (2 beta + s)),
/// which Gauss-Laguerre resolves well.
inline double exp_decay_cov_quadrature(double t, double t_prime, const ExpDecayParams& p,
                                       int nodes = 64) {
  if (nodes < 16) {
    throw std::invalid_argument("exp_decay_cov_quadrature: need at least 16 nodes");
  }
  if (!std::isfinite(t) || !std::isfinite(t_prime) || t < 0.0 || t_prime < 0.0) {
    throw std::invalid_argument("exp_decay_cov_quadrature: bad times");
  }
  p.validate();
  const double s = t + t_prime;
  const double scale = p.beta + 0.5 * s;
  const double rho = 0.5 * s / scale;
  // Rules depend only on (nodes, alpha); keep the last one per thread.
  thread_local int cached_nodes = 0;
  thread_local double cached_shape = 0.0;
  thread_local detail::LaguerreRule rule;
  if (cached_nodes != nodes || cached_shape != p.alpha - 1.0) {
    rule = detail::generalized_laguerre(nodes, p.alpha - 1.0);
    cached_nodes = nodes;
    cached_shape = p.alpha - 1.0;
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights(i) * std::exp(-rho * rule.nodes(i));
  }
  return std::pow(p.beta / scale, p.alpha) * sum;
}

inline double ou_cov(double t, double t_prime, const OuParams& ou) {
  return ou.variance * std::exp(-std::abs(t - t_prime) / ou.length);
}

/// Gram matrix over one curve's epochs; noise on the diagonal.
inline MatrixXd curve_gram(std::span<const double> times, const ExpDecayParams& p,
                           const std::optional<OuParams>& ou = std::nullopt) {
  p.validate();
  if (ou) ou->validate();
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw std::invalid_argument("curve_gram: times must be strictly increasing");
    }
  }
  const auto n = static_cast<Eigen::Index>(times.size());
  MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double v = exp_decay_cov(times[i], times[j], p, i == j);
      if (ou) v += ou_cov(times[i], times[j], *ou);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

/// Gram on the epoch grid 1..T.
inline MatrixXd epoch_gram(Eigen::Index epochs, const ExpDecayParams& p) {
  std::vector<double> times(static_cast<std::size_t>(epochs));
  for (Eigen::Index i = 0; i < epochs; ++i) times[static_cast<std::size_t>(i)] = double(i + 1);
  return curve_gram(times, p);
}

// ---------------------------------------------------------------------------
// Warped Matern-5/2

inline double beta_warp(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument("beta_warp: x must lie in [0, 1]");
  }
  if (!(a > 0.0 && b > 0.0)) {
    throw std::invalid_argument("beta_warp: shapes must be positive");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  if (a == 1.0 && b == 1.0) return x;
  using Policy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
  return boost::math::ibeta(a, b, x, Policy());
}

inline VectorXd warp_point(const VectorXd& x, const WarpedMaternParams& p) {
  if (x.size() != p.dim()) {
    throw std::invalid_argument("warp_point: dimension mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(p.dim()) + ")");
  }
  VectorXd w(x.size());
  for (Eigen::Index d = 0; d < x.size(); ++d) w(d) = beta_warp(x(d), p.warp_a(d), p.warp_b(d));
  return w;
}

inline double matern52_from_sqdist(double r2, double amplitude) {
  const double r = std::sqrt(5.0 * r2);
  return amplitude * (1.0 + r + (5.0 / 3.0) * r2) * std::exp(-r);
}

// Covariance between two already-warped points.
inline double matern52_warped(const VectorXd& wx, const VectorXd& wy,
                              const WarpedMaternParams& p) {
  const double r2 = ((wx - wy).array() / p.length_scales.array()).square().sum();
  return matern52_from_sqdist(r2, p.amplitude);
}

inline double matern52_cov(const VectorXd& x, const VectorXd& x_prime,
                           const WarpedMaternParams& p) {
  if (x.size() != x_prime.size()) {
    throw std::invalid_argument("matern52_cov: dimension mismatch");
  }
  return matern52_warped(warp_point(x, p), warp_point(x_prime, p), p);
}

inline Points warp_points(const Points& xs, const WarpedMaternParams& p) {
  Points out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(warp_point(x, p));
  return out;
}

inline MatrixXd cross_gram_warped(const Points& wa, const Points& wb,
                                  const WarpedMaternParams& p) {
  MatrixXd k(static_cast<Eigen::Index>(wa.size()), static_cast<Eigen::Index>(wb.size()));
  for (std::size_t i = 0; i < wa.size(); ++i)
    for (std::size_t j = 0; j < wb.size(); ++j)
      k(Eigen::Index(i), Eigen::Index(j)) = matern52_warped(wa[i], wb[j], p);
  return k;
}

inline MatrixXd hyper_gram(const Points& xs, const WarpedMaternParams& p) {
  p.validate();
  for (const auto& x : xs) {
    if (x.size() != p.dim()) throw std::invalid_argument("hyper_gram: dimension mismatch");
    if (x.size() > 0 && (x.minCoeff() < 0.0 || x.maxCoeff() > 1.0)) {
      throw std::invalid_argument("hyper_gram: points must lie in the unit hypercube");
    }
  }
  const auto w = warp_points(xs, p);
  const auto n = static_cast<Eigen::Index>(xs.size());
  MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = p.amplitude;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = matern52_warped(w[std::size_t(i)], w[std::size_t(j)], p);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

}  // namespace ftbo
