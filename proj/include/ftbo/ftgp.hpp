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
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ftbo/curves.hpp"
#include "ftbo/kernels.hpp"
#include "ftbo/latent_gp.hpp"
#include "ftbo/linalg.hpp"

namespace ftbo {

/// All GP hyperparameters of the freeze-thaw model.
struct Hypers {
  WarpedMaternParams space;
  ExpDecayParams curve;

  void validate() const {
    space.validate();
    curve.validate();
  }
};

/// Cholesky factor of the decay kernel (with noise) on the epoch grid
/// 1..capacity. Since every curve is observed on a prefix of that grid, the
/// leading T x T block of this one factor is the factor of any T-epoch curve,
/// and forward substitution against it only ever touches the prefix.
class EpochFactor {
 public:
  EpochFactor() = default;

  EpochFactor(const ExpDecayParams& p, Eigen::Index capacity) : params_(p) {
    chol_ = jittered_cholesky(epoch_gram(capacity, p));
    ones_half_ = chol_.half_solve(VectorXd::Ones(capacity));
    cum_ones_sq_ = VectorXd::Zero(capacity + 1);
    cum_log_diag_ = VectorXd::Zero(capacity + 1);
    for (Eigen::Index i = 0; i < capacity; ++i) {
      cum_ones_sq_(i + 1) = cum_ones_sq_(i) + ones_half_(i) * ones_half_(i);
      cum_log_diag_(i + 1) = cum_log_diag_(i) + 2.0 * std::log(chol_.lower(i, i));
    }
  }

  Eigen::Index capacity() const { return ones_half_.size(); }
  const ExpDecayParams& params() const { return params_; }
  const MatrixXd& lower() const { return chol_.lower; }
  double jitter() const { return chol_.jitter; }

  // 1^T K_T^{-1} 1 for the first `epochs` grid points.
  double ones_precision(Eigen::Index epochs) const { return cum_ones_sq_(epochs); }
  double log_det(Eigen::Index epochs) const { return cum_log_diag_(epochs); }

  // L_T^{-1} 1
  auto ones_half(Eigen::Index epochs) const { return ones_half_.head(epochs); }

  VectorXd half_solve(std::span<const double> y) const {
    const auto t = Eigen::Index(y.size());
    if (t > capacity()) throw std::out_of_range("EpochFactor: curve longer than the grid");
    Eigen::Map<const VectorXd> yv(y.data(), t);
    return chol_.lower.topLeftCorner(t, t).triangularView<Eigen::Lower>().solve(yv);
  }

  // Extends a prefix solve z = L_T^{-1} y by one more observation.
  double extend_half_solve(const VectorXd& z, double y_next) const {
    const auto t = z.size();
    if (t + 1 > capacity()) throw std::out_of_range("EpochFactor: no room for another epoch");
    const double dot = chol_.lower.row(t).head(t).dot(z);
    return (y_next - dot) / chol_.lower(t, t);
  }

 private:
  ExpDecayParams params_;
  Cholesky chol_;
  VectorXd ones_half_;
  VectorXd cum_ones_sq_;
  VectorXd cum_log_diag_;
};

/// Per-curve quantities that depend only on the curve kernel, not on the
/// hyper-space kernel or the prior mean.
struct CurveSolve {
  std::size_t config = 0;  // index into the CurveSet
  VectorXd z;              // L_n^{-1} y_n
  double lambda = 0.0;     // 1^T K_n^{-1} 1
  double ones_dot_y = 0.0; // 1^T K_n^{-1} y_n
  double log_det = 0.0;    // log |K_n|
};

class CurveStatistics {
 public:
  CurveStatistics() = default;

  CurveStatistics(const CurveSet& data, const ExpDecayParams& p, Eigen::Index extra_epochs = 1) {
    p.validate();
    const Eigen::Index capacity = std::max<Eigen::Index>(data.max_epochs() + extra_epochs, 1);
    factor_ = EpochFactor(p, capacity);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& c = data[i];
      if (c.y.empty()) continue;
      CurveSolve s;
      s.config = i;
      s.z = factor_.half_solve(c.y);
      s.lambda = factor_.ones_precision(c.epochs());
      s.ones_dot_y = factor_.ones_half(c.epochs()).dot(s.z);
      s.log_det = factor_.log_det(c.epochs());
      solves_.push_back(std::move(s));
      observed_points_.push_back(c.x);
      observations_ += c.y.size();
    }
  }

  const EpochFactor& factor() const { return factor_; }
  const std::vector<CurveSolve>& solves() const { return solves_; }
  const Points& observed_points() const { return observed_points_; }
  std::size_t observations() const { return observations_; }

 private:
  EpochFactor factor_;
  std::vector<CurveSolve> solves_;
  Points observed_points_;
  std::size_t observations_ = 0;
};

struct AssembledSites {
  LatentGp gp;
  VectorXd gamma;  // per observed curve, in CurveStatistics order
  double log_likelihood = 0.0;
};

// Collapses every observed curve to its pseudo-observation site and evaluates
// the log marginal likelihood through the Woodbury / determinant-lemma form:
//   -1/2 sum_n r_n^T K_n^{-1} r_n + 1/2 g^T (K_x^{-1} + L)^{-1} g
//   -1/2 (log|K_x^{-1} + L| + log|K_x| + sum_n log|K_n|) - M/2 log 2 pi
// with r_n = y_n - m, g_n = 1^T K_n^{-1} r_n and L = diag(1^T K_n^{-1} 1).
// The two hyper-space log-determinants are taken together as
// log|L| + log|K_x + L^{-1}|.
inline AssembledSites assemble_sites(const CurveStatistics& stats, const WarpedMaternParams& space,
                                     const Points* warped = nullptr) {
  const double m = space.mean;
  const auto& solves = stats.solves();
  const auto n_obs = Eigen::Index(solves.size());
  AssembledSites out;
  out.gamma.resize(n_obs);
  VectorXd precision(n_obs), residual(n_obs);
  double quad_curves = 0.0, log_dets = 0.0;
  for (Eigen::Index k = 0; k < n_obs; ++k) {
    const auto& s = solves[std::size_t(k)];
    const double g = s.ones_dot_y - m * s.lambda;
    out.gamma(k) = g;
    precision(k) = s.lambda;
    residual(k) = g / s.lambda;
    quad_curves += (s.z - m * stats.factor().ones_half(s.z.size())).squaredNorm();
    log_dets += s.log_det + std::log(s.lambda);
  }
  out.gp = warped ? LatentGp(space, stats.observed_points(), *warped, precision, residual)
                  : LatentGp(space, stats.observed_points(), precision, residual);
  if (n_obs > 0) {
    // g^T (K_x^{-1} + L)^{-1} g = g^T L^{-1} g - r^T A^{-1} r,  A = K_x + L^{-1}
    const double gcg = out.gamma.dot(residual) - out.gp.quad();
    out.log_likelihood = -0.5 * quad_curves + 0.5 * gcg - 0.5 * (out.gp.log_det() + log_dets) -
                         0.5 * double(stats.observations()) * std::log(2.0 * std::numbers::pi);
  }
  return out;
}

/// The fitted freeze-thaw GP: each curve is the latent asymptote f(x_n) plus
/// an independent decay-kernel GP, and f is a warped Matern GP over configs.
/// Curves with no observations are carried along as prediction targets only.
class FtgpModel {
 public:
  FtgpModel() = default;

  FtgpModel(const CurveSet& data, const Hypers& h, Eigen::Index extra_epochs = 1)
      : FtgpModel(data, h, CurveStatistics(data, h.curve, extra_epochs)) {}

  FtgpModel(const CurveSet& data, const Hypers& h, CurveStatistics stats)
      : hypers_(h), stats_(std::move(stats)) {
    h.validate();
    if (data.dim() != h.space.dim()) {
      throw std::invalid_argument("FtgpModel: data dimension does not match hyperparameters");
    }
    auto sites = assemble_sites(stats_, h.space);
    latent_ = std::move(sites.gp);
    log_likelihood_ = sites.log_likelihood;
    gamma_ = VectorXd::Zero(Eigen::Index(data.size()));
    lambda_ = VectorXd::Zero(Eigen::Index(data.size()));
    const auto& solves = stats_.solves();
    for (std::size_t k = 0; k < solves.size(); ++k) {
      gamma_(Eigen::Index(solves[k].config)) = sites.gamma(Eigen::Index(k));
      lambda_(Eigen::Index(solves[k].config)) = solves[k].lambda;
    }

    for (const auto& c : data.curves()) {
      points_.push_back(c.x);
      curves_.push_back(c.y);
    }
    auto post = latent_.joint(points_);
    latent_mean_ = std::move(post.mean);
    latent_cov_ = std::move(post.cov);
  }

  const Hypers& hypers() const { return hypers_; }
  std::size_t size() const { return points_.size(); }
  const Points& points() const { return points_; }
  const std::vector<double>& curve(std::size_t n) const { return curves_.at(n); }
  const EpochFactor& epoch_factor() const { return stats_.factor(); }
  const LatentGp& latent() const { return latent_; }

  double log_marginal_likelihood() const { return log_likelihood_; }
  const VectorXd& gamma() const { return gamma_; }
  const VectorXd& lambda() const { return lambda_; }
  const VectorXd& latent_mean() const { return latent_mean_; }
  const MatrixXd& latent_cov() const { return latent_cov_; }

  GaussianPrediction predict_asymptote_new(const VectorXd& x_star) const {
    check_point(x_star);
    return latent_.at(x_star);
  }

  GaussianPrediction predict_asymptote_observed(std::size_t n) const {
    check_index(n);
    return {latent_mean_(Eigen::Index(n)), std::max(latent_cov_(Eigen::Index(n), Eigen::Index(n)), 0.0)};
  }

  JointGaussian predict_asymptotes(const Points& xs) const { return latent_.joint(xs); }

  /// Joint forecast of curve n at the epochs t_star (all beyond its last
  /// observation). With observation_noise unset this is the latent curve.
  JointGaussian predict_curve_next(std::size_t n, std::span<const double> t_star,
                                   bool observation_noise = true) const {
    check_index(n);
    const auto& y = curves_[n];
    if (y.empty()) throw std::invalid_argument("predict_curve_next: curve has no observations");
    const auto tn = Eigen::Index(y.size());
    const auto s = Eigen::Index(t_star.size());
    for (double t : t_star) {
      if (!(std::isfinite(t) && t > double(tn))) {
        throw std::invalid_argument("predict_curve_next: t_star must exceed the last observed epoch");
      }
    }
    const auto& p = hypers_.curve;
    MatrixXd k_cross(tn, s);
    for (Eigen::Index i = 0; i < tn; ++i)
      for (Eigen::Index j = 0; j < s; ++j) k_cross(i, j) = exp_decay_cov(double(i + 1), t_star[std::size_t(j)], p);
    MatrixXd k_star(s, s);
    for (Eigen::Index i = 0; i < s; ++i)
      for (Eigen::Index j = 0; j < s; ++j)
        k_star(i, j) = exp_decay_cov(t_star[std::size_t(i)], t_star[std::size_t(j)], p,
                                     observation_noise && i == j);

    const auto& factor = stats_.factor();
    const MatrixXd v = factor.lower().topLeftCorner(tn, tn).triangularView<Eigen::Lower>().solve(k_cross);
    const VectorXd z = factor.half_solve(y);
    const VectorXd omega = VectorXd::Ones(s) - v.transpose() * factor.ones_half(tn);
    const auto post = predict_asymptote_observed(n);

    JointGaussian out;
    out.mean = v.transpose() * z + omega * post.mean;
    out.cov = k_star - v.transpose() * v + post.variance * omega * omega.transpose();
    return out;
  }

  GaussianPrediction predict_curve_next(std::size_t n, double t_star, bool observation_noise = true) const {
    const double t[1] = {t_star};
    return predict_curve_next(n, t, observation_noise).marginal(0);
  }

  /// Forecast for a configuration with no observations at epoch t_star.
  GaussianPrediction predict_curve_new(const VectorXd& x_star, double t_star) const {
    if (!(std::isfinite(t_star) && t_star >= 1.0)) {
      throw std::invalid_argument("predict_curve_new: t_star must be >= 1");
    }
    const auto f = predict_asymptote_new(x_star);
    return {f.mean, f.variance + exp_decay_cov(t_star, t_star, hypers_.curve, true)};
  }

  // Pseudo-observation site of curve n after appending one more loss.
  std::pair<double, double> site_after_next_epoch(std::size_t n, double y_next) const {
    check_index(n);
    const auto& y = curves_[n];
    const auto tn = Eigen::Index(y.size());
    const auto& factor = stats_.factor();
    const VectorXd z = factor.half_solve(y);
    const double z_next = factor.extend_half_solve(z, y_next);
    const double lambda = factor.ones_precision(tn + 1);
    const double ones_dot_y = factor.ones_half(tn).dot(z) + factor.ones_half(tn + 1)(tn) * z_next;
    const double g = ones_dot_y - hypers_.space.mean * lambda;
    return {lambda, g / lambda};
  }

  /// The hyper-space posterior after fantasizing y_next as curve n's next loss.
  LatentGp condition_next_epoch(std::size_t n, double y_next) const {
    const auto [lambda, residual] = site_after_next_epoch(n, y_next);
    if (curves_[n].empty()) return latent_.with_new_site(points_[n], lambda, residual);
    const auto k = site_index(n);
    return latent_.with_site(k, lambda, residual);
  }

  /// The hyper-space posterior after fantasizing y_first as the first loss of
  /// a new configuration at x.
  LatentGp condition_new_curve(const VectorXd& x, double y_first) const {
    check_point(x);
    const double lambda = stats_.factor().ones_precision(1);
    return latent_.with_new_site(x, lambda, y_first - hypers_.space.mean);
  }

 private:
  void check_index(std::size_t n) const {
    if (n >= points_.size()) {
      throw std::out_of_range("FtgpModel: unknown config index " + std::to_string(n));
    }
  }

  void check_point(const VectorXd& x) const {
    if (x.size() != hypers_.space.dim() || !x.allFinite() ||
        (x.size() > 0 && (x.minCoeff() < 0.0 || x.maxCoeff() > 1.0))) {
      throw std::invalid_argument("FtgpModel: query point outside the unit hypercube");
    }
  }

  std::size_t site_index(std::size_t n) const {
    const auto& solves = stats_.solves();
    for (std::size_t k = 0; k < solves.size(); ++k)
      if (solves[k].config == n) return k;
    throw std::logic_error("FtgpModel: curve has no site");
  }

  Hypers hypers_;
  CurveStatistics stats_;
  LatentGp latent_;
  Points points_;
  std::vector<std::vector<double>> curves_;
  VectorXd gamma_;
  VectorXd lambda_;
  VectorXd latent_mean_;
  MatrixXd latent_cov_;
  double log_likelihood_ = 0.0;
};

inline FtgpModel fit(const CurveSet& data, const Hypers& h, Eigen::Index extra_epochs = 1) {
  if (data.total_observations() == 0) {
    throw std::invalid_argument("fit: need at least one observation");
  }
  return FtgpModel(data, h, extra_epochs);
}

inline double log_marginal_likelihood(const CurveSet& data, const Hypers& h) {
  return fit(data, h).log_marginal_likelihood();
}

/// Marginal likelihood evaluator that reuses the curve-kernel factorization
/// while only hyper-space parameters or the prior mean change.
class MarginalLikelihood {
 public:
  explicit MarginalLikelihood(const CurveSet& data) : data_(&data) {}

  double operator()(const Hypers& h) {
    if (data_->total_observations() == 0) return 0.0;
    const auto& p = h.curve;
    if (!cache_ || cached_.alpha != p.alpha || cached_.beta != p.beta ||
        cached_.noise_var != p.noise_var) {
      cache_.reset();
      cache_.emplace(*data_, p);
      cached_ = p;
    }
    h.validate();
    if (warped_.empty() || warp_a_ != h.space.warp_a || warp_b_ != h.space.warp_b) {
      warped_ = warp_points(cache_->observed_points(), h.space);
      warp_a_ = h.space.warp_a;
      warp_b_ = h.space.warp_b;
    }
    return assemble_sites(*cache_, h.space, &warped_).log_likelihood;
  }

 private:
  const CurveSet* data_;
  std::optional<CurveStatistics> cache_;
  ExpDecayParams cached_;
  // The observed points never change, so warps only depend on the shapes.
  Points warped_;
  VectorXd warp_a_, warp_b_;
};

}  // namespace ftbo
