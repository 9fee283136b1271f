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
#include <stdexcept>
#include <string>
#include <vector>

#include "ftbo/curves.hpp"
#include "ftbo/ftgp.hpp"
#include "ftbo/kernels.hpp"
#include "ftbo/linalg.hpp"

namespace ftbo {

// Reference implementation that materializes the full joint covariance of all
// observed losses, K_t + O K_x O^T, and does every computation by direct dense
// Gaussian conditioning. O((sum T_n)^3); meant for checking FtgpModel.
class DenseJointOracle {
 public:
  static constexpr std::size_t kMaxObservations = 400;

  DenseJointOracle(const CurveSet& data, const Hypers& h) : h_(h) {
    h.validate();
    for (std::size_t n = 0; n < data.size(); ++n) {
      for (std::size_t t = 0; t < data[n].y.size(); ++t) {
        owner_.push_back(n);
        epoch_.push_back(double(t + 1));
        values_.push_back(data[n].y[t]);
      }
    }
    if (owner_.size() > kMaxObservations) {
      throw std::invalid_argument("DenseJointOracle: " + std::to_string(owner_.size()) +
                                  " observations exceeds the oracle size guard");
    }
    for (const auto& c : data.curves()) xs_.push_back(c.x);
    k_x_ = hyper_gram(xs_, h.space);

    const auto m = Eigen::Index(owner_.size());
    MatrixXd sigma(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const auto a = owner_[std::size_t(i)], b = owner_[std::size_t(j)];
        double v = k_x_(Eigen::Index(a), Eigen::Index(b));
        if (a == b) v += exp_decay_cov(epoch_[std::size_t(i)], epoch_[std::size_t(j)], h.curve, i == j);
        sigma(i, j) = v;
      }
    }
    chol_ = jittered_cholesky(sigma);
    centered_ = Eigen::Map<const VectorXd>(values_.data(), m).array() - h.space.mean;
    alpha_ = chol_.solve(centered_);

    // Latent posterior over every config's asymptote.
    const MatrixXd cross = cross_latent(xs_);
    mu_ = VectorXd::Constant(Eigen::Index(xs_.size()), h.space.mean) + cross * alpha_;
    const MatrixXd v = chol_.half_solve(cross.transpose());
    c_ = k_x_ - v.transpose() * v;
  }

  std::size_t observations() const { return owner_.size(); }

  double log_density() const {
    const auto m = double(owner_.size());
    return -0.5 * centered_.dot(alpha_) - 0.5 * chol_.log_det() -
           0.5 * m * std::log(2.0 * std::numbers::pi);
  }

  const VectorXd& latent_mean() const { return mu_; }
  const MatrixXd& latent_cov() const { return c_; }

  GaussianPrediction predict_asymptote_new(const VectorXd& x) const {
    const MatrixXd cross = cross_latent(Points{x});
    return condition(h_.space.mean, h_.space.amplitude, cross.row(0).transpose());
  }

  GaussianPrediction predict_curve_next(std::size_t n, double t_star, bool observation_noise = true) const {
    VectorXd cross(Eigen::Index(owner_.size()));
    for (std::size_t j = 0; j < owner_.size(); ++j) {
      double v = k_x_(Eigen::Index(n), Eigen::Index(owner_[j]));
      if (owner_[j] == n) v += exp_decay_cov(t_star, epoch_[j], h_.curve);
      cross(Eigen::Index(j)) = v;
    }
    const double prior = h_.space.amplitude + exp_decay_cov(t_star, t_star, h_.curve, observation_noise);
    return condition(h_.space.mean, prior, cross);
  }

  GaussianPrediction predict_curve_new(const VectorXd& x, double t_star) const {
    const MatrixXd cross = cross_latent(Points{x});
    const double prior = h_.space.amplitude + exp_decay_cov(t_star, t_star, h_.curve, true);
    return condition(h_.space.mean, prior, cross.row(0).transpose());
  }

 private:
  // Cov(f(query_i), y_j) = k_x(query_i, x_owner(j))
  MatrixXd cross_latent(const Points& query) const {
    MatrixXd out(Eigen::Index(query.size()), Eigen::Index(owner_.size()));
    for (std::size_t i = 0; i < query.size(); ++i)
      for (std::size_t j = 0; j < owner_.size(); ++j)
        out(Eigen::Index(i), Eigen::Index(j)) = matern52_cov(query[i], xs_[owner_[j]], h_.space);
    return out;
  }

  GaussianPrediction condition(double prior_mean, double prior_var, const VectorXd& cross) const {
    if (owner_.empty()) return {prior_mean, prior_var};
    const VectorXd v = chol_.half_solve(cross);
    return {prior_mean + cross.dot(alpha_), prior_var - v.squaredNorm()};
  }

  Hypers h_;
  std::vector<std::size_t> owner_;
  std::vector<double> epoch_;
  std::vector<double> values_;
  Points xs_;
  MatrixXd k_x_;
  Cholesky chol_;
  VectorXd centered_;
  VectorXd alpha_;
  VectorXd mu_;
  MatrixXd c_;
};

}  // namespace ftbo
