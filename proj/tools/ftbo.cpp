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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ftbo/bench.hpp"
#include "ftbo/controller.hpp"
#include "ftbo/protocol.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct BenchArgs {
  std::string family = "branin-decay";
  int dim = 0;
  long budget = 300;
  bool baseline = false;
  long epochs_per_eval = 30;
  int seeds = 5;
  double obs_noise = 0.01;
};

int cmd_bench(const BenchArgs& a, std::uint64_t seed, const std::string& out, const ftbo::Settings& settings) {
  const auto family = ftbo::parse_family(a.family);
  const Eigen::Index dim = a.dim > 0 ? a.dim : (family == ftbo::Family::pmf_analog ? 3 : 2);
  const fs::path dir = out.empty() ? fs::path("bench_out") : fs::path(out);
  std::vector<ftbo::RunTrace> runs;
  for (int k = 0; k < a.seeds; ++k) {
    const std::uint64_t s = seed + std::uint64_t(k);
    const auto obj = ftbo::make_objective(family, dim, s, a.obs_noise);
    runs.push_back(ftbo::run_freeze_thaw(obj, a.budget, settings, s));
    ftbo::emit_trace_csv(runs.back(), dir / ("trace_freeze-thaw_seed" + std::to_string(s) + ".csv"));
    std::cerr << "freeze-thaw seed " << s << ": final regret " << runs.back().rows.back().regret << "\n";
    if (a.baseline) {
      runs.push_back(ftbo::run_baseline_ei(obj, a.budget, a.epochs_per_eval, s));
      ftbo::emit_trace_csv(runs.back(), dir / ("trace_baseline-ei_seed" + std::to_string(s) + ".csv"));
      if (!runs.back().rows.empty()) {
        std::cerr << "baseline-ei seed " << s << ": final regret " << runs.back().rows.back().regret << "\n";
      }
    }
  }
  ftbo::emit_summary_csv(runs, dir / "summary.csv");
  return 0;
}

int cmd_serve(const std::string& bounds_path, const std::string& state_path, std::uint64_t seed,
              const ftbo::Settings& settings) {
  std::optional<fs::path> path;
  if (!state_path.empty()) path = state_path;
  ftbo::OptState state;
  if (path && fs::exists(*path)) {
    state = ftbo::read_state_file(*path);
  } else {
    if (bounds_path.empty()) throw std::invalid_argument("serve needs --bounds for a new session");
    state = ftbo::make_state(ftbo::parse_bounds(slurp(bounds_path)), settings, seed);
    if (path) ftbo::write_state_file(state, *path);
  }
  ftbo::Session session(std::move(state), path);
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::cout << session.handle(line) << std::endl;
  }
  return 0;
}

int cmd_kernel_samples(const std::string& mode, double alpha, double beta, int n, int t_max, std::uint64_t seed,
                       const std::string& out) {
  std::vector<double> t;
  for (int i = 0; i <= t_max; ++i) t.push_back(double(i));
  std::mt19937_64 rng(seed);
  const auto samples = ftbo::kernel_samples(ftbo::parse_sample_mode(mode), {alpha, beta, 0.0}, t, std::size_t(n), rng);
  if (out.empty()) {
    std::cout << ftbo::samples_csv(t, samples);
  } else {
    ftbo::emit_samples_csv(t, samples, out);
  }
  return 0;
}

int cmd_inspect(const std::string& state_path) {
  const auto s = ftbo::read_state_file(state_path);
  std::printf("dimensions: %ld\n", long(s.bounds.dim()));
  for (const auto& d : s.bounds.dimensions()) std::printf("  %s in [%.6g, %.6g]\n", d.name.c_str(), d.lower, d.upper);
  std::printf("seed: %llu  round: %llu\n", static_cast<unsigned long long>(s.seed),
              static_cast<unsigned long long>(s.round));
  std::printf("curves: %zu  observations: %zu\n", s.data.size(), s.data.total_observations());
  if (s.pending) {
    std::printf("pending: %s config %lld until epoch %ld\n", ftbo::to_string(s.pending->action.kind),
                static_cast<long long>(s.pending->action.config_id), long(s.pending->target_epochs));
  }
  if (s.data.total_observations() == 0) return 0;
  const ftbo::Hypers h = s.chain ? *s.chain : ftbo::initial_hypers(s.data.dim(), s.data.mean_observation());
  const auto model = ftbo::fit(s.data, h);
  std::printf("%10s %7s %12s %12s %12s %12s\n", "config", "epochs", "last_loss", "best_loss", "asym_mean", "asym_sd");
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    const auto& c = s.data[i];
    const auto p = c.y.empty() ? model.predict_asymptote_new(c.x) : model.predict_asymptote_observed(i);
    std::printf("%10lld %7ld ", static_cast<long long>(c.id), long(c.epochs()));
    if (c.y.empty()) {
      std::printf("%12s %12s ", "-", "-");
    } else {
      std::printf("%12.6g %12.6g ", c.y.back(), *std::min_element(c.y.begin(), c.y.end()));
    }
    std::printf("%12.6g %12.6g\n", p.mean, std::sqrt(p.variance));
  }
  const auto r = ftbo::current_report(s);
  std::printf("best observed loss: %.6g (config %lld)\n", *r.best_observed,
              static_cast<long long>(*r.best_observed_config));
  std::printf("best asymptote: %.6g +/- %.6g (config %lld)\n", r.best_asymptote->mean,
              std::sqrt(r.best_asymptote->variance), static_cast<long long>(*r.best_asymptote_config));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Freeze-thaw Bayesian optimization"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string state_path, out;
  ftbo::Settings settings;
  auto add_common = [&](CLI::App* c) {
    c->add_option("--seed", seed, "Random seed")->capture_default_str();
    c->add_option("--state", state_path, "State file");
    c->add_option("--out", out, "Output path");
  };
  auto add_settings = [&](CLI::App* c) {
    c->add_option("--basket-old", settings.basket_old, "Old configs in the basket")->capture_default_str();
    c->add_option("--basket-new", settings.basket_new, "New candidates in the basket")->capture_default_str();
    c->add_option("--n-fant", settings.n_fant, "Fantasies per basket member")->capture_default_str();
    c->add_option("--n-mc", settings.n_mc, "Monte Carlo draws for P_min")->capture_default_str();
    c->add_option("--mcmc-samples", settings.mcmc_samples, "Hyperparameter samples per round")->capture_default_str();
    c->add_option("--mcmc-burn-in", settings.mcmc_burn_in, "Burn-in sweeps for a fresh chain")->capture_default_str();
    c->add_option("--pool-size", settings.pool_size, "Candidate pool size")->capture_default_str();
    c->add_option("--epochs-per-decision", settings.epochs_per_decision, "Epochs per action")->capture_default_str();
  };

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Run synthetic benchmarks and write trace CSVs");
  add_common(b);
  add_settings(b);
  b->add_option("--family", bench.family, "branin-decay | random-gp-decay | pmf-analog")->capture_default_str();
  b->add_option("--dim", bench.dim, "Dimension (random-gp-decay only)");
  b->add_option("--budget", bench.budget, "Epoch budget per run")->capture_default_str();
  b->add_flag("--baseline", bench.baseline, "Also run the fixed-epoch EI baseline");
  b->add_option("--epochs-per-eval", bench.epochs_per_eval, "Baseline epochs per evaluation")->capture_default_str();
  b->add_option("--seeds", bench.seeds, "Number of consecutive seeds")->capture_default_str();
  b->add_option("--obs-noise", bench.obs_noise, "Observation noise sd")->capture_default_str();

  std::string bounds_path;
  auto* serve = app.add_subcommand("serve", "Answer the ask/tell protocol on stdin/stdout");
  add_common(serve);
  add_settings(serve);
  serve->add_option("--bounds", bounds_path, "Bounds JSON file");

  std::string mode = "prior";
  double alpha = 1.0, beta = 0.5;
  int n_samples = 10, t_max = 100;
  auto* ks = app.add_subcommand("kernel-samples", "Draw curves from the decay kernel");
  add_common(ks);
  ks->add_option("--mode", mode, "basis | prior | training")->capture_default_str();
  ks->add_option("--alpha", alpha, "Gamma shape")->capture_default_str();
  ks->add_option("--beta", beta, "Gamma rate")->capture_default_str();
  ks->add_option("--samples", n_samples, "Number of curves")->capture_default_str();
  ks->add_option("--t-max", t_max, "Last time step")->capture_default_str();

  auto* inspect = app.add_subcommand("inspect", "Summarize a state file");
  add_common(inspect);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*b) return cmd_bench(bench, seed, out, settings);
    if (*serve) return cmd_serve(bounds_path, state_path, seed, settings);
    if (*ks) return cmd_kernel_samples(mode, alpha, beta, n_samples, t_max, seed, out);
    if (*inspect) {
      if (state_path.empty()) throw std::invalid_argument("inspect needs --state");
      return cmd_inspect(state_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
