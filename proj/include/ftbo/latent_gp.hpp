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
#include <stdexcept>
#include <utility>

#include "ftbo/kernels.hpp"
#include "ftbo/linalg.hpp"

namespace ftbo {

struct GaussianPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct JointGaussian {
  VectorXd mean;
  MatrixXd cov;

  Eigen::Index size() const { return mean.size(); }
  GaussianPrediction marginal(Eigen::Index i) const { return {mean(i), cov(i, i)}; }
};

// GP over the hyperparameter space observed through independent Gaussian
// pseudo-observations: site n contributes precision lambda_n and a residual
// r_n = gamma_n / lambda_n about the prior mean. A training curve collapses
// to exactly one such site, and so does a plain noisy evaluation (lambda =
// 1/noise, r = y - m), which is what the fixed-epoch baseline uses.
//
// Every solve goes through the Cholesky factor of A = K_x + diag(1/lambda);
// K_x itself is never factored.
class LatentGp {
 public:
  LatentGp() = default;

  LatentGp(WarpedMaternParams params, Points xs, VectorXd precision, VectorXd residual)
      : LatentGp(params, xs, warp_points(xs, params), std::move(precision), std::move(residual)) {}

  // `warped` must equal warp_points(xs, params).
  LatentGp(WarpedMaternParams params, Points xs, Points warped, VectorXd precision, VectorXd residual)
      : params_(std::move(params)),
        xs_(std::move(xs)),
        warped_(std::move(warped)),
        precision_(std::move(precision)),
        residual_(std::move(residual)) {
    if (precision_.size() != Eigen::Index(xs_.size()) || residual_.size() != precision_.size() ||
        warped_.size() != xs_.size()) {
      throw std::invalid_argument("LatentGp: site vectors must match the number of points");
    }
    if (precision_.size() > 0 && !(precision_.minCoeff() > 0.0)) {
      throw std::invalid_argument("LatentGp: site precisions must be positive");
    }
    refactor();
  }

  const WarpedMaternParams& params() const { return params_; }
  const Points& points() const { return xs_; }
  const VectorXd& precision() const { return precision_; }
  const VectorXd& residual() const { return residual_; }
  std::size_t sites() const { return xs_.size(); }

  // log|A|
  double log_det() const { return chol_.log_det(); }

  // r^T A^{-1} r
  double quad() const { return residual_.dot(weights_); }

  JointGaussian joint(const Points& query) const { return joint_warped(warp_points(query, params_)); }

  // Same as joint() for points already passed through this model's warp.
  JointGaussian joint_warped(const Points& wq) const {
    JointGaussian out;
    out.cov = cross_gram_warped(wq, wq, params_);
    out.mean = VectorXd::Constant(Eigen::Index(wq.size()), params_.mean);
    if (!xs_.empty()) {
      const MatrixXd k_oq = cross_gram_warped(warped_, wq, params_);
      out.mean += k_oq.transpose() * weights_;
      const MatrixXd v = chol_.half_solve(k_oq);
      out.cov.noalias() -= v.transpose() * v;
    }
    return out;
  }

  // Marginal means and variances only, without the full query covariance.
  std::pair<VectorXd, VectorXd> marginals(const Points& query) const {
    const auto wq = warp_points(query, params_);
    const auto q = Eigen::Index(query.size());
    VectorXd mean = VectorXd::Constant(q, params_.mean);
    VectorXd var = VectorXd::Constant(q, params_.amplitude);
    if (!xs_.empty()) {
      const MatrixXd k_oq = cross_gram_warped(warped_, wq, params_);
      mean += k_oq.transpose() * weights_;
      const MatrixXd v = chol_.half_solve(k_oq);
      var -= v.colwise().squaredNorm().transpose();
    }
    return {std::move(mean), var.cwiseMax(0.0)};
  }

  GaussianPrediction at(const VectorXd& x) const {
    const auto j = joint(Points{x});
    return {j.mean(0), std::max(j.cov(0, 0), 0.0)};
  }

  LatentGp with_site(std::size_t i, double precision, double residual) const {
    LatentGp out = *this;
    out.precision_(Eigen::Index(i)) = precision;
    out.residual_(Eigen::Index(i)) = residual;
    out.refactor();
    return out;
  }

  LatentGp with_new_site(const VectorXd& x, double precision, double residual) const {
    LatentGp out = *this;
    const auto n = precision_.size();
    out.xs_.push_back(x);
    out.warped_.push_back(warp_point(x, params_));
    out.precision_.conservativeResize(n + 1);
    out.residual_.conservativeResize(n + 1);
    out.precision_(n) = precision;
    out.residual_(n) = residual;
    out.refactor();
    return out;
  }

 private:
  void refactor() {
    const auto n = Eigen::Index(xs_.size());
    if (n == 0) {
      chol_ = {};
      weights_.resize(0);
      return;
    }
    MatrixXd a = cross_gram_warped(warped_, warped_, params_);
    a.diagonal() += precision_.cwiseInverse();
    chol_ = jittered_cholesky(a);
    weights_ = chol_.solve(residual_);
  }

  WarpedMaternParams params_;
  Points xs_;
  Points warped_;
  VectorXd precision_;
  VectorXd residual_;
  Cholesky chol_;
  VectorXd weights_;
};

}  // namespace ftbo
