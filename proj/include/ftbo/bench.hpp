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
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftbo/acquisition.hpp"
#include "ftbo/candidates.hpp"
#include "ftbo/controller.hpp"
#include "ftbo/hypers.hpp"
#include "ftbo/latent_gp.hpp"

namespace ftbo {

enum class Family { branin_decay, random_gp_decay, pmf_analog };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::branin_decay: return "branin-decay";
    case Family::random_gp_decay: return "random-gp-decay";
    case Family::pmf_analog: return "pmf-analog";
  }
  return "?";
}

inline Family parse_family(const std::string& name) {
  for (auto f : {Family::branin_decay, Family::random_gp_decay, Family::pmf_analog})
    if (to_string(f) == name) return f;
  throw std::invalid_argument("unknown objective family '" + name + "'");
}

namespace detail {

inline std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_point(const VectorXd& x, std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t h = splitmix(seed ^ splitmix(salt));
  for (Eigen::Index d = 0; d < x.size(); ++d) h = splitmix(h ^ std::bit_cast<std::uint64_t>(x(d)));
  return h;
}

// Uniform in (0, 1) from the top 53 bits.
inline double to_unit_open(std::uint64_t h) { return (double(h >> 11) + 0.5) * 0x1.0p-53; }

inline double branin(double x1, double x2) {
  constexpr double pi = std::numbers::pi;
  const double b = 5.1 / (4.0 * pi * pi), c = 5.0 / pi, s = 10.0, t = 1.0 / (8.0 * pi);
  const double q = x2 - b * x1 * x1 + c * x1 - 6.0;
  return q * q + s * (1.0 - t) * std::cos(x1) + s;
}

inline constexpr double kBraninMin = 5.0 / (4.0 * std::numbers::pi);

}  // namespace detail

/// Training curves with a known limit: curve(x, t) = f(x) + c(x) exp(-lambda(x) t)
/// plus Gaussian noise. All randomness is a hash of (x, t, seed), so the same
/// query always returns the same loss.
class SyntheticObjective {
 public:
  SyntheticObjective(Family family, Eigen::Index dim, std::uint64_t seed, double obs_noise = 0.01)
      : family_(family), dim_(dim), seed_(seed), obs_noise_(obs_noise) {
    if (!(obs_noise >= 0.0)) throw std::invalid_argument("SyntheticObjective: obs_noise must be non-negative");
    switch (family) {
      case Family::branin_decay:
        if (dim != 2) throw std::invalid_argument("branin-decay is two-dimensional");
        branin_max_ = detail::branin(-5.0, 0.0);
        min_value_ = 0.0;
        break;
      case Family::random_gp_decay:
        if (dim < 1 || dim > 5) throw std::invalid_argument("random-gp-decay needs 1 <= dim <= 5");
        init_random_gp();
        break;
      case Family::pmf_analog:
        if (dim != 3) throw std::invalid_argument("pmf-analog is three-dimensional");
        init_pmf();
        break;
    }
  }

  Family family() const { return family_; }
  Eigen::Index dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  double obs_noise() const { return obs_noise_; }

  double asymptote(const VectorXd& x) const {
    check(x);
    switch (family_) {
      case Family::branin_decay: {
        const double b = detail::branin(-5.0 + 15.0 * x(0), 15.0 * x(1));
        return (b - detail::kBraninMin) / (branin_max_ - detail::kBraninMin);
      }
      case Family::random_gp_decay: {
        double f = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i) f += weights_[i] * std::cos(freqs_[i].dot(x) + phases_[i]);
        return offset_ + scale_ * f;
      }
      case Family::pmf_analog: {
        const VectorXd d = x - center_;
        const double valley = d(1) - 0.6 * d(0);
        return 0.1 + 0.6 * d(0) * d(0) + 0.4 * d(2) * d(2) + 40.0 * valley * valley;
      }
    }
    return 0.0;
  }

  /// log-uniform on [0.05, 1]
  double decay_rate(const VectorXd& x) const {
    return 0.05 * std::pow(20.0, detail::to_unit_open(detail::hash_point(x, seed_, 1)));
  }

  /// uniform on [0.5, 2]
  double amplitude(const VectorXd& x) const {
    return 0.5 + 1.5 * detail::to_unit_open(detail::hash_point(x, seed_, 2));
  }

  double expected(const VectorXd& x, double t) const {
    return asymptote(x) + amplitude(x) * std::exp(-decay_rate(x) * t);
  }

  double curve(const VectorXd& x, Eigen::Index t) const {
    if (obs_noise_ == 0.0) return expected(x, double(t));
    const std::uint64_t h = detail::hash_point(x, seed_, 3 + 2 * std::uint64_t(t));
    const double u1 = detail::to_unit_open(h);
    const double u2 = detail::to_unit_open(detail::splitmix(h));
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return expected(x, double(t)) + obs_noise_ * z;
  }

  /// Minimum of the asymptote over [0,1]^D.
  double min_asymptote() const { return min_value_; }

  /// Brute-force minimum over a regular grid with `per_dim` points per axis.
  double grid_min(std::size_t per_dim) const {
    VectorXd x(dim_);
    std::vector<std::size_t> idx(std::size_t(dim_), 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
      for (Eigen::Index d = 0; d < dim_; ++d) x(d) = double(idx[std::size_t(d)]) / double(per_dim - 1);
      best = std::min(best, asymptote(x));
      std::size_t d = 0;
      while (d < idx.size() && ++idx[d] == per_dim) idx[d++] = 0;
      if (d == idx.size()) break;
    }
    return best;
  }

 private:
  void check(const VectorXd& x) const {
    if (x.size() != dim_) throw std::invalid_argument("SyntheticObjective: dimension mismatch");
  }

  // Random Fourier features of a squared-exponential GP, rescaled to roughly [0, 1].
  void init_random_gp() {
    std::mt19937_64 rng(detail::splitmix(seed_ ^ 0x5eed));
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    const std::size_t m = 256;
    const double length = 0.25;
    for (std::size_t i = 0; i < m; ++i) {
      freqs_.push_back(VectorXd::NullaryExpr(dim_, [&](Eigen::Index) { return z(rng) / length; }));
      phases_.push_back(u(rng));
      weights_.push_back(std::sqrt(2.0 / double(m)) * z(rng));
    }
    offset_ = 0.0;
    scale_ = 1.0;
    std::mt19937_64 pool_rng(detail::splitmix(seed_ ^ 0x9001));
    const auto pool = sobol_pool(dim_, 1 << 14, pool_rng);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    VectorXd best;
    for (const auto& x : pool) {
      const double f = asymptote(x);
      if (f < lo) {
        lo = f;
        best = x;
      }
      hi = std::max(hi, f);
    }
    // Shift and scale so the sampled range is [0, 1], then polish the minimum.
    scale_ = 1.0 / (hi - lo);
    offset_ = -lo * scale_;
    min_value_ = refine_min(best);
  }

  void init_pmf() {
    std::mt19937_64 rng(detail::splitmix(seed_ ^ 0x9f));
    std::uniform_real_distribution<double> u(0.3, 0.7);
    center_ = VectorXd::NullaryExpr(3, [&](Eigen::Index) { return u(rng); });
    min_value_ = 0.1;
  }

  // Compass search inside the unit cube.
  double refine_min(VectorXd x) const {
    double fx = asymptote(x);
    for (double step = 0.01; step > 1e-9; step *= 0.5) {
      bool moved = true;
      while (moved) {
        moved = false;
        for (Eigen::Index d = 0; d < dim_; ++d)
          for (double s : {-step, step}) {
            VectorXd y = x;
            y(d) = std::clamp(y(d) + s, 0.0, 1.0);
            const double fy = asymptote(y);
            if (fy < fx) {
              x = y;
              fx = fy;
              moved = true;
            }
          }
      }
    }
    return fx;
  }

  Family family_;
  Eigen::Index dim_;
  std::uint64_t seed_;
  double obs_noise_;
  double min_value_ = 0.0;
  double branin_max_ = 1.0;
  std::vector<VectorXd> freqs_;
  std::vector<double> phases_;
  std::vector<double> weights_;
  double offset_ = 0.0;
  double scale_ = 1.0;
  VectorXd center_;
};

inline SyntheticObjective make_objective(Family family, Eigen::Index dim, std::uint64_t seed, double obs_noise = 0.01) {
  return SyntheticObjective(family, dim, seed, obs_noise);
}

struct TraceRow {
  std::size_t decision = 0;
  Eigen::Index cumulative_epochs = 0;
  std::string action;  // start | resume | eval
  ConfigId config_id = 0;
  Eigen::Index epoch = 0;
  double observed_loss = 0.0;
  double best_observed = 0.0;
  double regret = 0.0;  // f(incumbent) - min f

  bool operator==(const TraceRow&) const = default;
};

struct RunTrace {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<TraceRow> rows;
};

class BenchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Drives the freeze-thaw controller until `budget_epochs` epochs are spent.
inline RunTrace run_freeze_thaw(const SyntheticObjective& obj, Eigen::Index budget_epochs, const Settings& settings,
                                std::uint64_t seed) {
  if (budget_epochs < 1) throw std::invalid_argument("run_freeze_thaw: budget must be positive");
  RunTrace trace{"freeze-thaw", seed, {}};
  auto state = make_state(Bounds::unit(obj.dim()), settings, seed);
  Eigen::Index spent = 0;
  double best = std::numeric_limits<double>::infinity();
  try {
    while (spent < budget_epochs) {
      const auto a = suggest(state);
      const auto i = *state.data.index_of(a.config_id);
      const auto k = std::min<Eigen::Index>(a.epochs, budget_epochs - spent);
      double y = 0.0;
      for (Eigen::Index e = 0; e < k; ++e) {
        const auto t = state.data[i].epochs() + 1;
        y = obj.curve(state.data[i].x, t);
        observe(state, a.config_id, t, y);
        best = std::min(best, y);
      }
      spent += k;
      // Incumbent as of this decision's round; before any model exists it is the only config.
      const auto inc = state.incumbent ? *state.data.index_of(*state.incumbent) : i;
      trace.rows.push_back({trace.rows.size(), spent, to_string(a.kind), a.config_id, state.data[i].epochs(), y, best,
                            obj.asymptote(state.data[inc].x) - obj.min_asymptote()});
    }
  } catch (const std::exception& e) {
    throw BenchError("freeze-thaw run (seed " + std::to_string(seed) + ", " + std::to_string(spent) +
                     " epochs spent): " + e.what());
  }
  return trace;
}

struct BaselineOptions {
  int mcmc_samples = 10;
  int mcmc_burn_in = 50;
  int mcmc_warm_burn_in = 10;
  std::size_t pool_size = kDefaultPoolSize;
};

/// Log evidence of a plain GP regression on one loss per config, with the
/// curve noise variance reused as observation noise.
inline double baseline_log_likelihood(const CurveSet& finals, const Hypers& h) {
  const auto n = Eigen::Index(finals.size());
  Points xs;
  VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    xs.push_back(finals[std::size_t(i)].x);
    r(i) = finals[std::size_t(i)].y.front() - h.space.mean;
  }
  const LatentGp gp(h.space, xs, VectorXd::Constant(n, 1.0 / h.curve.noise_var), r);
  return -0.5 * (gp.quad() + gp.log_det() + double(n) * std::log(2.0 * std::numbers::pi));
}

/// Fixed-epoch EI: every evaluation trains a config for epochs_per_eval
/// epochs and reports the last loss to a warped-Matern GP.
inline RunTrace run_baseline_ei(const SyntheticObjective& obj, Eigen::Index budget_epochs, Eigen::Index epochs_per_eval,
                                std::uint64_t seed, const BaselineOptions& opts = {}) {
  if (epochs_per_eval < 1) throw std::invalid_argument("run_baseline_ei: epochs_per_eval must be positive");
  RunTrace trace{"baseline-ei", seed, {}};
  CurveSet finals(obj.dim());
  std::optional<Hypers> chain;
  Eigen::Index spent = 0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t incumbent = 0;
  try {
    for (std::uint64_t round = 0; spent + epochs_per_eval <= budget_epochs; ++round) {
      auto rng = round_rng(seed, round);
      const auto pool = sobol_pool(obj.dim(), opts.pool_size, rng);
      VectorXd x;
      if (finals.empty()) {
        x = pool.front();
      } else {
        const auto bounds = mean_bounds(finals);
        Hypers init = chain ? *chain : initial_hypers(obj.dim(), finals.mean_observation());
        init.space.mean = std::clamp(init.space.mean, bounds.first, bounds.second);
        const auto samples = run_hyper_chain(
            init, [&](const Hypers& h) { return baseline_log_likelihood(finals, h); }, HyperPriorSpec{}, bounds,
            ChainLayout{.curve_shape = false, .noise = true, .mean = true},
            ChainOptions{opts.mcmc_samples, chain ? opts.mcmc_warm_burn_in : opts.mcmc_burn_in, 1}, rng);
        chain = samples.back();
        Points xs;
        for (const auto& c : finals.curves()) xs.push_back(c.x);
        std::vector<double> ei(pool.size(), 0.0);
        for (const auto& h : samples) {
          const auto n = Eigen::Index(finals.size());
          VectorXd r(n);
          for (Eigen::Index i = 0; i < n; ++i) r(i) = finals[std::size_t(i)].y.front() - h.space.mean;
          const LatentGp gp(h.space, xs, VectorXd::Constant(n, 1.0 / h.curve.noise_var), r);
          const auto [mean, var] = gp.marginals(pool);
          for (std::size_t j = 0; j < pool.size(); ++j)
            ei[j] += expected_improvement(mean(Eigen::Index(j)), var(Eigen::Index(j)), best) / double(samples.size());
        }
        std::size_t pick = 0;
        for (std::size_t j = 1; j < pool.size(); ++j)
          if (ei[j] > ei[pick]) pick = j;
        x = pool[pick];
      }
      const double y = obj.curve(x, epochs_per_eval);
      const auto id = ConfigId(finals.size());
      finals.add_curve(id, x, {y});
      if (y < best) {
        best = y;
        incumbent = finals.size() - 1;
      }
      spent += epochs_per_eval;
      trace.rows.push_back({trace.rows.size(), spent, "eval", id, epochs_per_eval, y, best,
                            obj.asymptote(finals[incumbent].x) - obj.min_asymptote()});
    }
  } catch (const std::exception& e) {
    throw BenchError("baseline run (seed " + std::to_string(seed) + ", " + std::to_string(spent) +
                     " epochs spent): " + e.what());
  }
  return trace;
}

/// Cumulative epochs at the first row whose regret is within `tol`.
inline std::optional<Eigen::Index> epochs_to_regret(const RunTrace& trace, double tol) {
  for (const auto& r : trace.rows)
    if (r.regret <= tol) return r.cumulative_epochs;
  return std::nullopt;
}

/// Longest run of other decisions between a config's previous action and a
/// later resume of it.
inline std::size_t longest_pause_before_resume(const RunTrace& trace) {
  std::map<ConfigId, std::size_t> last;
  std::size_t longest = 0;
  for (const auto& r : trace.rows) {
    if (r.action == "resume") {
      if (auto it = last.find(r.config_id); it != last.end()) longest = std::max(longest, r.decision - it->second - 1);
    }
    last[r.config_id] = r.decision;
  }
  return longest;
}

// ---------------------------------------------------------------------------
// CSV output. Doubles use 17 significant digits.

inline constexpr const char* kTraceHeader =
    "method,seed,decision,cumulative_epochs,action,config_id,epoch,observed_loss,best_observed,regret";

namespace detail {

inline std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

inline void close_csv(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string trace_csv(const RunTrace& t) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (const auto& r : t.rows) {
    out += t.method + "," + std::to_string(t.seed) + "," + std::to_string(r.decision) + "," +
           std::to_string(r.cumulative_epochs) + "," + r.action + "," + std::to_string(r.config_id) + "," +
           std::to_string(r.epoch) + "," + detail::num(r.observed_loss) + "," + detail::num(r.best_observed) + "," +
           detail::num(r.regret) + "\n";
  }
  return out;
}

inline void emit_trace_csv(const RunTrace& t, const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << trace_csv(t);
  detail::close_csv(out, path);
}

/// Median over runs of best_observed and regret, at every cumulative epoch
/// count that appears in any run. A run contributes its last row at or
/// before that count; runs with no such row are left out.
inline void emit_summary_csv(const std::vector<RunTrace>& runs, const std::filesystem::path& path) {
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  std::map<std::string, std::vector<const RunTrace*>> by_method;
  for (const auto& r : runs) by_method[r.method].push_back(&r);
  auto out = detail::open_csv(path);
  out << "method,cumulative_epochs,runs,median_best_observed,median_regret\n";
  for (const auto& [method, group] : by_method) {
    std::vector<Eigen::Index> grid;
    for (const auto* r : group)
      for (const auto& row : r->rows) grid.push_back(row.cumulative_epochs);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (auto e : grid) {
      std::vector<double> best, regret;
      for (const auto* r : group) {
        const TraceRow* last = nullptr;
        for (const auto& row : r->rows)
          if (row.cumulative_epochs <= e) last = &row;
        if (last) {
          best.push_back(last->best_observed);
          regret.push_back(last->regret);
        }
      }
      out << method << ',' << e << ',' << best.size() << ',' << detail::num(median(best)) << ','
          << detail::num(median(regret)) << '\n';
    }
  }
  detail::close_csv(out, path);
}

/// Long-format samples: one row per (sample, t).
inline std::string samples_csv(const std::vector<double>& t, const MatrixXd& samples) {
  if (samples.cols() != Eigen::Index(t.size())) throw std::invalid_argument("samples_csv: size mismatch");
  std::string out = "sample,t,value\n";
  for (Eigen::Index s = 0; s < samples.rows(); ++s)
    for (Eigen::Index j = 0; j < samples.cols(); ++j)
      out += std::to_string(s) + "," + detail::num(t[std::size_t(j)]) + "," + detail::num(samples(s, j)) + "\n";
  return out;
}

inline void emit_samples_csv(const std::vector<double>& t, const MatrixXd& samples, const std::filesystem::path& path) {
  const auto text = samples_csv(t, samples);
  auto out = detail::open_csv(path);
  out << text;
  detail::close_csv(out, path);
}

// ---------------------------------------------------------------------------
// Decay-kernel illustrations.

enum class SampleMode { basis, prior, training };

inline SampleMode parse_sample_mode(const std::string& name) {
  if (name == "basis") return SampleMode::basis;
  if (name == "prior") return SampleMode::prior;
  if (name == "training") return SampleMode::training;
  throw std::invalid_argument("unknown sample mode '" + name + "'");
}

/// One row per draw, one column per time.
///   basis:    exp(-lambda t) with lambda ~ Gamma(shape alpha, rate beta)
///   prior:    zero-mean GP with the decay kernel
///   training: the prior conditioned on a positive value at t = 0
///             (uniform on [0.5, 1.5]) plus an OU term
template <typename Rng>
MatrixXd kernel_samples(SampleMode mode, const ExpDecayParams& p, const std::vector<double>& t, std::size_t n,
                        Rng& rng, const OuParams& ou = {}) {
  p.validate();
  const auto m = Eigen::Index(t.size());
  MatrixXd out(Eigen::Index(n), m);
  std::normal_distribution<double> z(0.0, 1.0);
  auto normals = [&](Eigen::Index k) { return VectorXd::NullaryExpr(k, [&](Eigen::Index) { return z(rng); }); };
  if (mode == SampleMode::basis) {
    std::gamma_distribution<double> lambda(p.alpha, 1.0 / p.beta);
    for (Eigen::Index s = 0; s < out.rows(); ++s) {
      const double l = lambda(rng);
      for (Eigen::Index j = 0; j < m; ++j) out(s, j) = std::exp(-l * t[std::size_t(j)]);
    }
    return out;
  }
  MatrixXd k(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) k(i, j) = exp_decay_cov(t[std::size_t(i)], t[std::size_t(j)], p);
  if (mode == SampleMode::prior) {
    const MatrixXd root = psd_sqrt(k);
    for (Eigen::Index s = 0; s < out.rows(); ++s) out.row(s) = (root * normals(m)).transpose();
    return out;
  }
  ou.validate();
  VectorXd k0(m);
  for (Eigen::Index j = 0; j < m; ++j) k0(j) = exp_decay_cov(0.0, t[std::size_t(j)], p);
  const double k00 = exp_decay_cov(0.0, 0.0, p);
  MatrixXd cond = k - k0 * k0.transpose() / k00;
  const MatrixXd root = psd_sqrt(cond);
  MatrixXd kou(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) kou(i, j) = ou_cov(t[std::size_t(i)], t[std::size_t(j)], ou);
  const MatrixXd root_ou = psd_sqrt(kou);
  std::uniform_real_distribution<double> start(0.5, 1.5);
  for (Eigen::Index s = 0; s < out.rows(); ++s) {
    const double y0 = start(rng);
    out.row(s) = (k0 * (y0 / k00) + root * normals(m) + root_ou * normals(m)).transpose();
  }
  return out;
}

}  // namespace ftbo
