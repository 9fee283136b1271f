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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftbo/acquisition.hpp"
#include "ftbo/candidates.hpp"
#include "ftbo/curves.hpp"
#include "ftbo/ftgp.hpp"
#include "ftbo/hypers.hpp"

namespace ftbo {

struct Dimension {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;

  bool operator==(const Dimension&) const = default;
};

/// User-facing search box. Everything inside the controller lives in
/// [0,1]^D; these are the affine maps in and out.
class Bounds {
 public:
  Bounds() = default;

  explicit Bounds(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw std::invalid_argument("Bounds: need at least one dimension");
    for (const auto& d : dims_) {
      if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || !(d.lower < d.upper)) {
        throw std::invalid_argument("Bounds: dimension '" + d.name + "' needs finite lower < upper");
      }
    }
  }

  static Bounds unit(Eigen::Index dim) {
    std::vector<Dimension> dims;
    for (Eigen::Index d = 0; d < dim; ++d) dims.push_back({"x" + std::to_string(d), 0.0, 1.0});
    return Bounds(std::move(dims));
  }

  Eigen::Index dim() const { return Eigen::Index(dims_.size()); }
  const std::vector<Dimension>& dimensions() const { return dims_; }

  VectorXd to_unit(const VectorXd& x) const {
    check(x);
    VectorXd u(dim());
    for (Eigen::Index d = 0; d < dim(); ++d) {
      const auto& b = dims_[std::size_t(d)];
      if (x(d) < b.lower || x(d) > b.upper) throw std::invalid_argument("Bounds: point outside the box");
      u(d) = std::clamp((x(d) - b.lower) / (b.upper - b.lower), 0.0, 1.0);
    }
    return u;
  }

  VectorXd from_unit(const VectorXd& u) const {
    check(u);
    VectorXd x(dim());
    for (Eigen::Index d = 0; d < dim(); ++d) {
      const auto& b = dims_[std::size_t(d)];
      x(d) = std::clamp(b.lower + u(d) * (b.upper - b.lower), b.lower, b.upper);
    }
    return x;
  }

  bool operator==(const Bounds&) const = default;

 private:
  void check(const VectorXd& x) const {
    if (x.size() != dim()) throw std::invalid_argument("Bounds: dimension mismatch");
  }

  std::vector<Dimension> dims_;
};

struct Settings {
  std::size_t basket_old = kDefaultBasketOld;
  std::size_t basket_new = kDefaultBasketNew;
  std::size_t n_fant = kDefaultFantasies;
  std::size_t n_mc = 1000;
  int mcmc_samples = 10;
  int mcmc_burn_in = 50;
  // Sweeps discarded when the chain continues from the previous round.
  int mcmc_warm_burn_in = 10;
  int mcmc_thin = 1;
  std::size_t pool_size = kDefaultPoolSize;
  int epochs_per_decision = 1;

  void validate() const {
    if (basket_old + basket_new == 0) throw std::invalid_argument("Settings: empty basket");
    if (basket_new == 0) throw std::invalid_argument("Settings: basket_new must be positive");
    if (n_fant < 1 || n_mc < 1) throw std::invalid_argument("Settings: n_fant and n_mc must be positive");
    if (mcmc_samples < 1 || mcmc_burn_in < 0 || mcmc_warm_burn_in < 0 || mcmc_thin < 1) {
      throw std::invalid_argument("Settings: bad MCMC counts");
    }
    if (pool_size < 1) throw std::invalid_argument("Settings: pool_size must be positive");
    if (epochs_per_decision < 1) throw std::invalid_argument("Settings: epochs_per_decision must be positive");
  }

  bool operator==(const Settings&) const = default;
};

enum class ActionKind { start, resume };

inline const char* to_string(ActionKind k) { return k == ActionKind::start ? "start" : "resume"; }

struct Action {
  ActionKind kind = ActionKind::start;
  ConfigId config_id = 0;
  VectorXd x;  // user coordinates
  int epochs = 1;

  bool operator==(const Action& o) const {
    return kind == o.kind && config_id == o.config_id && x.size() == o.x.size() && x == o.x &&
           epochs == o.epochs;
  }
};

/// An action handed out but not yet fully observed.
struct Pending {
  Action action;
  Eigen::Index target_epochs = 0;

  bool operator==(const Pending&) const = default;
};

struct OptState {
  Bounds bounds;
  Settings settings;
  CurveSet data;
  std::uint64_t seed = 0;
  std::uint64_t round = 0;
  ConfigId next_id = 0;
  std::optional<Hypers> chain;         // last hyperparameter sample
  std::optional<ConfigId> incumbent;   // best posterior asymptote at the last round
  std::optional<Pending> pending;
};

inline OptState make_state(Bounds bounds, Settings settings, std::uint64_t seed) {
  settings.validate();
  OptState s;
  s.data = CurveSet(bounds.dim());
  s.bounds = std::move(bounds);
  s.settings = settings;
  s.seed = seed;
  return s;
}

class RoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::mt19937_64 round_rng(std::uint64_t seed, std::uint64_t round) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(round),
                    std::uint32_t(round >> 32)};
  return std::mt19937_64(seq);
}

namespace detail {

inline bool pending_open(const OptState& s) {
  if (!s.pending) return false;
  const auto i = s.data.index_of(s.pending->action.config_id);
  return i && s.data[*i].epochs() < s.pending->target_epochs;
}

inline Action start_new(OptState& s, const VectorXd& unit_x) {
  const ConfigId id = s.next_id++;
  s.data.add_config(id, unit_x);
  return {ActionKind::start, id, s.bounds.from_unit(unit_x), s.settings.epochs_per_decision};
}

// Without observations every pool point has the same prior EI, so the
// lowest-index point that is not already a config wins.
inline Action prior_round(OptState& s, std::mt19937_64& rng) {
  const auto pool = sobol_pool(s.data.dim(), s.settings.pool_size, rng);
  for (const auto& x : pool) {
    bool dup = false;
    for (const auto& c : s.data.curves()) dup = dup || same_point(x, c.x);
    if (!dup) return start_new(s, x);
  }
  throw std::runtime_error("candidate pool is empty after removing existing configs");
}

inline Action model_round(OptState& s, std::mt19937_64& rng) {
  const auto& st = s.settings;
  const int burn_in = s.chain ? st.mcmc_warm_burn_in : st.mcmc_burn_in;
  const auto samples = sample_hypers(s.data, HyperPriorSpec{}, st.mcmc_samples, burn_in, rng, s.chain, st.mcmc_thin);
  s.chain = samples.back();

  std::vector<FtgpModel> models;
  for (const auto& h : samples) {
    try {
      models.push_back(fit(s.data, h));
    } catch (const CholeskyError&) {
    }
  }
  if (models.empty()) throw std::runtime_error("no hyperparameter sample gave a factorizable model");

  const auto pool = sobol_pool(s.data.dim(), st.pool_size, rng);
  const auto basket = build_basket(models, s.data, pool, st.basket_old, st.basket_new);
  const auto scores = score_actions(models, s.data, basket, st.n_fant, st.n_mc, rng);
  const auto k = select_action(scores);
  if (basket.incumbent) s.incumbent = s.data[*basket.incumbent].id;

  if (basket.is_old(k)) {
    const auto& c = s.data[basket.old_members[k]];
    return {ActionKind::resume, c.id, s.bounds.from_unit(c.x), st.epochs_per_decision};
  }
  return start_new(s, basket.points[k]);
}

}  // namespace detail

/// Runs one decision round and returns the action. While the previous
/// action still has epochs outstanding, returns it again unchanged.
inline Action suggest(OptState& state) {
  if (detail::pending_open(state)) return state.pending->action;
  OptState next = state;
  next.pending.reset();
  try {
    auto rng = round_rng(next.seed, next.round);
    Action a = next.data.total_observations() == 0 ? detail::prior_round(next, rng)
                                                   : detail::model_round(next, rng);
    const auto i = *next.data.index_of(a.config_id);
    next.pending = Pending{a, next.data[i].epochs() + a.epochs};
    ++next.round;
    state = std::move(next);
    return a;
  } catch (const std::exception& e) {
    throw RoundError("round " + std::to_string(state.round) + ": " + e.what());
  }
}

/// Records the loss after `epoch` for a known config. Epochs must arrive in
/// order: epoch == T_n + 1.
inline void observe(OptState& state, ConfigId id, Eigen::Index epoch, double loss) {
  const auto i = state.data.index_of(id);
  if (!i) throw std::invalid_argument("unknown config id " + std::to_string(id));
  if (!std::isfinite(loss)) throw std::invalid_argument("non-finite loss");
  const auto expected = state.data[*i].epochs() + 1;
  if (epoch != expected) {
    throw std::invalid_argument("non-contiguous epoch: expected " + std::to_string(expected) + ", got " +
                                std::to_string(epoch));
  }
  state.data.append(*i, loss);
  if (state.pending && !detail::pending_open(state)) state.pending.reset();
}

struct Report {
  std::size_t curves = 0;
  std::size_t observations = 0;
  std::optional<ConfigId> best_observed_config;
  std::optional<double> best_observed;
  std::optional<ConfigId> best_asymptote_config;
  std::optional<GaussianPrediction> best_asymptote;
};

/// Best raw loss seen so far and best posterior asymptote under the last
/// hyperparameter sample.
inline Report current_report(const OptState& s) {
  Report r;
  r.curves = s.data.size();
  r.observations = s.data.total_observations();
  for (const auto& c : s.data.curves())
    for (double y : c.y)
      if (!r.best_observed || y < *r.best_observed) {
        r.best_observed = y;
        r.best_observed_config = c.id;
      }
  if (r.observations == 0) return r;
  const Hypers h = s.chain ? *s.chain : initial_hypers(s.data.dim(), s.data.mean_observation());
  const auto model = fit(s.data, h);
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    if (s.data[i].y.empty()) continue;
    const auto p = model.predict_asymptote_observed(i);
    if (!r.best_asymptote || p.mean < r.best_asymptote->mean) {
      r.best_asymptote = p;
      r.best_asymptote_config = s.data[i].id;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// State document

inline constexpr const char* kStateSchema = "ftbo-state";
inline constexpr int kStateVersion = 1;

class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

inline json to_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), Eigen::Index(v.size()));
}

inline json to_json(const Hypers& h) {
  return {{"amplitude", h.space.amplitude},
          {"length_scales", to_json(h.space.length_scales)},
          {"warp_a", to_json(h.space.warp_a)},
          {"warp_b", to_json(h.space.warp_b)},
          {"mean", h.space.mean},
          {"alpha", h.curve.alpha},
          {"beta", h.curve.beta},
          {"noise_var", h.curve.noise_var}};
}

inline Hypers hypers_from(const json& j) {
  Hypers h;
  h.space.amplitude = j.at("amplitude").get<double>();
  h.space.length_scales = vector_from(j.at("length_scales"));
  h.space.warp_a = vector_from(j.at("warp_a"));
  h.space.warp_b = vector_from(j.at("warp_b"));
  h.space.mean = j.at("mean").get<double>();
  h.curve.alpha = j.at("alpha").get<double>();
  h.curve.beta = j.at("beta").get<double>();
  h.curve.noise_var = j.at("noise_var").get<double>();
  h.validate();
  return h;
}

inline json to_json(const Action& a) {
  return {{"action", to_string(a.kind)}, {"config_id", a.config_id}, {"x", to_json(a.x)}, {"epochs", a.epochs}};
}

inline Action action_from(const json& j) {
  Action a;
  const auto kind = j.at("action").get<std::string>();
  if (kind != "start" && kind != "resume") throw StateError("unknown action kind '" + kind + "'");
  a.kind = kind == "start" ? ActionKind::start : ActionKind::resume;
  a.config_id = j.at("config_id").get<ConfigId>();
  a.x = vector_from(j.at("x"));
  a.epochs = j.at("epochs").get<int>();
  return a;
}

}  // namespace detail

inline std::string save_state(const OptState& s) {
  using detail::json;
  using detail::to_json;
  json dims = json::array();
  for (const auto& d : s.bounds.dimensions()) dims.push_back({{"name", d.name}, {"lower", d.lower}, {"upper", d.upper}});
  const auto& st = s.settings;
  json settings = {{"basket_old", st.basket_old},
                   {"basket_new", st.basket_new},
                   {"n_fant", st.n_fant},
                   {"n_mc", st.n_mc},
                   {"mcmc_samples", st.mcmc_samples},
                   {"mcmc_burn_in", st.mcmc_burn_in},
                   {"mcmc_warm_burn_in", st.mcmc_warm_burn_in},
                   {"mcmc_thin", st.mcmc_thin},
                   {"pool_size", st.pool_size},
                   {"epochs_per_decision", st.epochs_per_decision}};
  json curves = json::array();
  for (const auto& c : s.data.curves()) curves.push_back({{"config_id", c.id}, {"x", to_json(c.x)}, {"y", c.y}});
  json doc = {{"schema", kStateSchema},
              {"version", kStateVersion},
              {"seed", s.seed},
              {"round", s.round},
              {"next_id", s.next_id},
              {"bounds", dims},
              {"settings", settings},
              {"curves", curves},
              {"chain", s.chain ? to_json(*s.chain) : json(nullptr)},
              {"incumbent", s.incumbent ? json(*s.incumbent) : json(nullptr)},
              {"pending", s.pending ? json{{"action", to_json(s.pending->action)},
                                           {"target_epochs", s.pending->target_epochs}}
                                    : json(nullptr)}};
  return doc.dump(1) + "\n";
}

/// Parses a state document. Either returns a complete state or throws
/// StateError; nothing is partially applied.
inline OptState load_state(const std::string& text) {
  using detail::json;
  try {
    const json doc = json::parse(text);
    if (doc.at("schema").get<std::string>() != kStateSchema) throw StateError("not an ftbo state document");
    const int version = doc.at("version").get<int>();
    if (version != kStateVersion) {
      throw StateError("state schema version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kStateVersion) + ")");
    }
    std::vector<Dimension> dims;
    for (const auto& d : doc.at("bounds"))
      dims.push_back({d.at("name").get<std::string>(), d.at("lower").get<double>(), d.at("upper").get<double>()});
    const auto& js = doc.at("settings");
    Settings st;
    st.basket_old = js.at("basket_old").get<std::size_t>();
    st.basket_new = js.at("basket_new").get<std::size_t>();
    st.n_fant = js.at("n_fant").get<std::size_t>();
    st.n_mc = js.at("n_mc").get<std::size_t>();
    st.mcmc_samples = js.at("mcmc_samples").get<int>();
    st.mcmc_burn_in = js.at("mcmc_burn_in").get<int>();
    st.mcmc_warm_burn_in = js.at("mcmc_warm_burn_in").get<int>();
    st.mcmc_thin = js.at("mcmc_thin").get<int>();
    st.pool_size = js.at("pool_size").get<std::size_t>();
    st.epochs_per_decision = js.at("epochs_per_decision").get<int>();

    OptState s = make_state(Bounds(std::move(dims)), st, doc.at("seed").get<std::uint64_t>());
    s.round = doc.at("round").get<std::uint64_t>();
    s.next_id = doc.at("next_id").get<ConfigId>();
    for (const auto& c : doc.at("curves")) {
      s.data.add_curve(c.at("config_id").get<ConfigId>(), detail::vector_from(c.at("x")),
                       c.at("y").get<std::vector<double>>());
    }
    for (const auto& c : s.data.curves())
      if (c.id >= s.next_id) throw StateError("next_id does not exceed every config id");
    if (!doc.at("chain").is_null()) {
      s.chain = detail::hypers_from(doc.at("chain"));
      if (s.chain->space.dim() != s.data.dim()) throw StateError("chain dimension mismatch");
    }
    if (!doc.at("incumbent").is_null()) s.incumbent = doc.at("incumbent").get<ConfigId>();
    if (!doc.at("pending").is_null()) {
      const auto& p = doc.at("pending");
      s.pending = Pending{detail::action_from(p.at("action")), p.at("target_epochs").get<Eigen::Index>()};
      if (!s.data.index_of(s.pending->action.config_id)) throw StateError("pending action names an unknown config");
    }
    return s;
  } catch (const StateError&) {
    throw;
  } catch (const std::exception& e) {
    throw StateError(std::string("invalid state document: ") + e.what());
  }
}

/// Writes via a temporary file and rename, so a crash leaves either the old
/// or the new document.
inline void write_state_file(const OptState& s, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << save_state(s);
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline OptState read_state_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_state(buf.str());
}

}  // namespace ftbo
