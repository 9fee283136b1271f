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
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "ftbo/curves.hpp"
#include "ftbo/ftgp.hpp"
#include "ftbo/latent_gp.hpp"
#include "ftbo/linalg.hpp"

namespace ftbo {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Expected improvement below `best` for a Gaussian N(mean, variance).
inline double expected_improvement(double mean, double variance, double best) {
  if (!(variance > 0.0)) return std::max(best - mean, 0.0);
  const double sd = std::sqrt(variance);
  const double z = (best - mean) / sd;
  return std::max(sd * (z * normal_cdf(z) + normal_pdf(z)), 0.0);
}

/// Candidates for one decision: configs that already have curves (old) and
/// fresh points (new). Member k < old_members.size() is old.
struct Basket {
  std::vector<std::size_t> old_members;  // indices into the CurveSet
  Points new_members;
  Points points;                          // query point of every member, old first
  std::vector<double> ei;                 // sample-averaged EI per member
  double best = 0.0;
  std::optional<std::size_t> incumbent;   // CurveSet index attaining best
  std::vector<JointGaussian> asymptotes;  // joint posterior over members, per hyper sample

  std::size_t size() const { return points.size(); }
  bool is_old(std::size_t k) const { return k < old_members.size(); }
};

inline constexpr std::size_t kDefaultBasketOld = 10;
inline constexpr std::size_t kDefaultBasketNew = 3;
inline constexpr std::size_t kDefaultFantasies = 5;

namespace detail {

inline std::vector<std::size_t> top_by_score(const std::vector<double>& score, std::size_t k) {
  std::vector<std::size_t> idx(score.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return score[a] > score[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

inline bool same_point(const VectorXd& a, const VectorXd& b) {
  return a.size() == b.size() && (a - b).cwiseAbs().maxCoeff() <= 1e-12;
}

}  // namespace detail

/// Picks up to b_old observed configs and b_new pool points by EI of the
/// asymptote, averaged over the hyperparameter samples. The incumbent is the
/// lowest sample-averaged posterior asymptote mean among observed configs.
inline Basket build_basket(std::span<const FtgpModel> models, const CurveSet& data, const Points& pool,
                           std::size_t b_old = kDefaultBasketOld, std::size_t b_new = kDefaultBasketNew) {
  if (models.empty()) throw std::invalid_argument("build_basket: need at least one model");
  const double n_models = double(models.size());

  std::vector<std::size_t> observed;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!data[i].y.empty()) observed.push_back(i);

  Basket basket;
  if (!observed.empty()) {
    basket.best = std::numeric_limits<double>::infinity();
    for (auto i : observed) {
      double mean = 0.0;
      for (const auto& m : models) mean += m.predict_asymptote_observed(i).mean / n_models;
      if (mean < basket.best) {
        basket.best = mean;
        basket.incumbent = i;
      }
    }
  } else {
    for (const auto& m : models) basket.best += m.hypers().space.mean / n_models;
  }

  std::vector<double> old_ei(observed.size(), 0.0);
  for (std::size_t j = 0; j < observed.size(); ++j)
    for (const auto& m : models) {
      const auto p = m.predict_asymptote_observed(observed[j]);
      old_ei[j] += expected_improvement(p.mean, p.variance, basket.best) / n_models;
    }
  for (auto j : detail::top_by_score(old_ei, b_old)) {
    basket.old_members.push_back(observed[j]);
    basket.points.push_back(data[observed[j]].x);
    basket.ei.push_back(old_ei[j]);
  }

  Points fresh;
  for (const auto& x : pool) {
    bool dup = false;
    for (const auto& c : data.curves()) dup = dup || detail::same_point(x, c.x);
    for (const auto& f : fresh) dup = dup || detail::same_point(x, f);
    if (!dup) fresh.push_back(x);
  }
  if (b_new > 0 && fresh.empty()) {
    throw std::invalid_argument("build_basket: candidate pool is empty after removing existing configs");
  }
  std::vector<double> new_ei(fresh.size(), 0.0);
  for (const auto& m : models) {
    const auto [mean, var] = m.latent().marginals(fresh);
    for (std::size_t j = 0; j < fresh.size(); ++j)
      new_ei[j] += expected_improvement(mean(Eigen::Index(j)), var(Eigen::Index(j)), basket.best) / n_models;
  }
  for (auto j : detail::top_by_score(new_ei, b_new)) {
    basket.new_members.push_back(fresh[j]);
    basket.points.push_back(fresh[j]);
    basket.ei.push_back(new_ei[j]);
  }

  for (const auto& m : models) basket.asymptotes.push_back(m.predict_asymptotes(basket.points));
  return basket;
}

struct PminEstimate {
  VectorXd probabilities;
  std::size_t n_mc = 0;
};

/// Monte Carlo estimate of which member attains the minimum asymptote. The
/// standard-normal draws and hyper-sample choices are fixed at construction,
/// so every estimate made with one sampler shares its random numbers.
class PminSampler {
 public:
  template <typename Rng>
  PminSampler(std::size_t n_models, std::size_t members, std::size_t n_mc, Rng& rng)
      : n_models_(n_models), draws_(Eigen::Index(members), Eigen::Index(n_mc)), model_of_(n_mc) {
    if (n_mc < 1 || n_models < 1) throw std::invalid_argument("PminSampler: need n_mc >= 1 and a model");
    std::uniform_int_distribution<std::size_t> pick(0, n_models - 1);
    std::normal_distribution<double> z(0.0, 1.0);
    for (std::size_t d = 0; d < n_mc; ++d) {
      model_of_[d] = pick(rng);
      for (Eigen::Index k = 0; k < draws_.rows(); ++k) draws_(k, Eigen::Index(d)) = z(rng);
    }
  }

  std::size_t n_mc() const { return model_of_.size(); }

  PminEstimate estimate(std::span<const JointGaussian> joints) const {
    if (joints.size() != n_models_) throw std::invalid_argument("PminSampler: wrong number of joints");
    const auto members = draws_.rows();
    std::vector<MatrixXd> roots;
    for (const auto& j : joints) {
      if (j.size() != members) throw std::invalid_argument("PminSampler: basket size mismatch");
      roots.push_back(psd_sqrt(j.cov));
    }
    VectorXd counts = VectorXd::Zero(members);
    VectorXd v(members);
    for (std::size_t d = 0; d < model_of_.size(); ++d) {
      const auto s = model_of_[d];
      v.noalias() = joints[s].mean + roots[s] * draws_.col(Eigen::Index(d));
      const double lo = v.minCoeff();
      const auto ties = (v.array() == lo).count();
      for (Eigen::Index k = 0; k < members; ++k)
        if (v(k) == lo) counts(k) += 1.0 / double(ties);
    }
    return {counts / double(model_of_.size()), model_of_.size()};
  }

 private:
  std::size_t n_models_;
  MatrixXd draws_;
  std::vector<std::size_t> model_of_;
};

template <typename Rng>
PminEstimate estimate_pmin(std::span<const FtgpModel> models, const Basket& basket, std::size_t n_mc, Rng& rng) {
  if (basket.size() == 0) throw std::invalid_argument("estimate_pmin: empty basket");
  if (basket.asymptotes.size() != models.size()) {
    throw std::invalid_argument("estimate_pmin: basket was built from a different model set");
  }
  PminSampler sampler(models.size(), basket.size(), n_mc, rng);
  return sampler.estimate(basket.asymptotes);
}

/// Shannon entropy in nats; 0 log 0 = 0.
inline double entropy(const VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (p(k) > 0.0) h -= p(k) * std::log(p(k));
  return std::max(h, 0.0);
}

/// Expected reduction in P_min entropy from running each basket member once
/// more, with its standard error over fantasies.
struct ActionScore {
  VectorXd gain;
  VectorXd std_error;
  std::size_t n_fant = kDefaultFantasies;

  std::size_t size() const { return std::size_t(gain.size()); }
};

/// For every member, fantasizes n_fant observations (next epoch of an old
/// curve, first epoch of a new one) under each hyper sample, conditions that
/// sample's model on it, and averages H(P_min) - H(P_min | fantasy). All
/// P_min estimates share one set of Monte Carlo draws; fantasy streams are
/// seeded per (member, fantasy) from one value taken from rng.
template <typename Rng>
ActionScore score_actions(std::span<const FtgpModel> models, const CurveSet& data, const Basket& basket,
                          std::size_t n_fant, std::size_t n_mc, Rng& rng) {
  if (basket.size() == 0) throw std::invalid_argument("score_actions: empty basket");
  if (basket.asymptotes.size() != models.size()) {
    throw std::invalid_argument("score_actions: basket was built from a different model set");
  }
  if (n_fant < 1) throw std::invalid_argument("score_actions: need n_fant >= 1");
  const std::uint64_t base_seed = rng();
  PminSampler sampler(models.size(), basket.size(), n_mc, rng);
  const double h0 = entropy(sampler.estimate(basket.asymptotes).probabilities);

  ActionScore score;
  score.n_fant = n_fant;
  score.gain = VectorXd::Zero(Eigen::Index(basket.size()));
  score.std_error = VectorXd::Zero(Eigen::Index(basket.size()));
  std::vector<JointGaussian> conditioned(models.size());
  std::vector<Points> warped_basket;
  for (const auto& m : models) warped_basket.push_back(warp_points(basket.points, m.latent().params()));

  for (std::size_t k = 0; k < basket.size(); ++k) {
    std::vector<double> gains;
    for (std::size_t i = 0; i < n_fant; ++i) {
      std::seed_seq seq{base_seed, std::uint64_t(k), std::uint64_t(i)};
      std::mt19937_64 task_rng(seq);
      std::normal_distribution<double> z(0.0, 1.0);
      try {
        for (std::size_t s = 0; s < models.size(); ++s) {
          const auto& model = models[s];
          if (basket.is_old(k)) {
            const auto n = basket.old_members[k];
            const auto pred = model.predict_curve_next(n, double(data[n].epochs() + 1));
            const double y = pred.mean + std::sqrt(std::max(pred.variance, 0.0)) * z(task_rng);
            conditioned[s] = model.condition_next_epoch(n, y).joint_warped(warped_basket[s]);
          } else {
            const auto& x = basket.points[k];
            const auto pred = model.predict_curve_new(x, 1.0);
            const double y = pred.mean + std::sqrt(std::max(pred.variance, 0.0)) * z(task_rng);
            conditioned[s] = model.condition_new_curve(x, y).joint_warped(warped_basket[s]);
          }
        }
      } catch (const CholeskyError&) {
        continue;
      }
      gains.push_back(h0 - entropy(sampler.estimate(conditioned).probabilities));
    }
    if (gains.empty()) continue;
    const double n = double(gains.size());
    const double mean = std::accumulate(gains.begin(), gains.end(), 0.0) / n;
    double ss = 0.0;
    for (double g : gains) ss += (g - mean) * (g - mean);
    score.gain(Eigen::Index(k)) = mean;
    score.std_error(Eigen::Index(k)) = gains.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  }
  return score;
}

/// argmax of the scores; the lowest index wins ties.
inline std::size_t select_action(const ActionScore& scores) {
  if (scores.size() == 0) throw std::invalid_argument("select_action: no scores");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k)
    if (scores.gain(Eigen::Index(k)) > scores.gain(Eigen::Index(best))) best = k;
  return best;
}

}  // namespace ftbo
