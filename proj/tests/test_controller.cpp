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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "ftbo/acquisition.hpp"
#include "ftbo/controller.hpp"
#include "ftbo/protocol.hpp"

namespace ftbo {
namespace {

Settings light_settings() {
  Settings s;
  s.n_mc = 200;
  s.n_fant = 3;
  s.mcmc_samples = 3;
  s.mcmc_burn_in = 5;
  s.mcmc_warm_burn_in = 2;
  s.pool_size = 64;
  return s;
}

Bounds box() { return Bounds({{"lr", -6.0, -1.0}, {"momentum", 0.0, 0.99}}); }

double toy_loss(const VectorXd& unit, Eigen::Index epoch) {
  const double f = (unit.array() - 0.3).square().sum();
  return f + (0.5 + unit(0)) * std::exp(-0.3 * double(epoch));
}

// Answers every suggestion with the toy objective until n decisions are made.
std::vector<Action> drive(OptState& s, int decisions) {
  std::vector<Action> out;
  for (int k = 0; k < decisions; ++k) {
    const auto a = suggest(s);
    out.push_back(a);
    const auto i = *s.data.index_of(a.config_id);
    for (int e = 0; e < a.epochs; ++e) {
      const auto t = s.data[i].epochs() + 1;
      observe(s, a.config_id, t, toy_loss(s.data[i].x, t));
    }
  }
  return out;
}

TEST(Bounds, AffineRoundTrip) {
  const auto b = box();
  const Eigen::Vector2d x(-3.5, 0.495);
  const auto u = b.to_unit(x);
  EXPECT_NEAR(u(0), 0.5, 1e-15);
  EXPECT_NEAR(u(1), 0.5, 1e-15);
  EXPECT_NEAR((b.from_unit(u) - x).norm(), 0.0, 1e-15);
  EXPECT_THROW(b.to_unit(Eigen::Vector2d(0.0, 0.5)), std::invalid_argument);
  EXPECT_THROW(Bounds({{"a", 1.0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(Bounds(std::vector<Dimension>{}), std::invalid_argument);
}

TEST(Observe, AppendsContiguousEpochs) {
  auto s = make_state(box(), light_settings(), 1);
  const auto a = suggest(s);
  EXPECT_EQ(a.kind, ActionKind::start);
  observe(s, a.config_id, 1, 0.7);
  EXPECT_EQ(s.data[*s.data.index_of(a.config_id)].epochs(), 1);
  try {
    observe(s, a.config_id, 3, 0.6);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("non-contiguous epoch"), std::string::npos);
  }
  EXPECT_THROW(observe(s, a.config_id, 1, 0.6), std::invalid_argument);
  EXPECT_THROW(observe(s, a.config_id, 2, std::nan("")), std::invalid_argument);
  EXPECT_THROW(observe(s, a.config_id, 2, INFINITY), std::invalid_argument);
  EXPECT_THROW(observe(s, 12345, 1, 0.5), std::invalid_argument);
  EXPECT_EQ(s.data.total_observations(), 1u);
}

TEST(Suggest, EmptyStateStartsAtFirstPoolPoint) {
  auto s = make_state(box(), light_settings(), 42);
  const auto a = suggest(s);
  EXPECT_EQ(a.kind, ActionKind::start);
  EXPECT_EQ(a.config_id, 0);
  EXPECT_EQ(a.epochs, 1);
  auto rng = round_rng(42, 0);
  const auto pool = sobol_pool(2, 64, rng);
  EXPECT_EQ(s.data[0].x, pool[0]);
  EXPECT_EQ(a.x, box().from_unit(pool[0]));
  EXPECT_EQ(s.round, 1u);
}

TEST(Suggest, RepeatsOutstandingAction) {
  auto s = make_state(box(), light_settings(), 3);
  const auto a = suggest(s);
  const auto b = suggest(s);
  EXPECT_EQ(a, b);
  EXPECT_EQ(s.round, 1u);
  EXPECT_EQ(s.data.size(), 1u);
}

TEST(Suggest, SameSerializedStateSameAction) {
  auto s = make_state(box(), light_settings(), 5);
  drive(s, 6);
  const auto doc = save_state(s);
  auto a = load_state(doc);
  auto b = load_state(doc);
  EXPECT_EQ(suggest(a), suggest(b));
  EXPECT_EQ(save_state(a), save_state(b));
}

TEST(Suggest, ActionsRespectContract) {
  auto s = make_state(box(), light_settings(), 6);
  s.settings.epochs_per_decision = 2;
  const auto actions = drive(s, 12);
  std::set<ConfigId> seen;
  for (const auto& a : actions) {
    EXPECT_LE(a.epochs, 2);
    EXPECT_GE(a.epochs, 1);
    for (Eigen::Index d = 0; d < 2; ++d) {
      EXPECT_GE(a.x(d), box().dimensions()[std::size_t(d)].lower);
      EXPECT_LE(a.x(d), box().dimensions()[std::size_t(d)].upper);
    }
    if (a.kind == ActionKind::resume) {
      EXPECT_TRUE(seen.count(a.config_id));
    } else {
      EXPECT_FALSE(seen.count(a.config_id));
    }
    seen.insert(a.config_id);
  }
  EXPECT_EQ(s.round, 12u);
  EXPECT_EQ(s.data.total_observations(), 24u);
}

TEST(Suggest, FullRunDeterminism) {
  auto a = make_state(box(), light_settings(), 77);
  auto b = make_state(box(), light_settings(), 77);
  EXPECT_EQ(drive(a, 10), drive(b, 10));
  EXPECT_EQ(save_state(a), save_state(b));
}

TEST(Suggest, ResumesCurveConvergingToBestAsymptote) {
  // Scoring with fixed hyperparameters on three old members: two long flat
  // curves and a short one still falling below both.
  Hypers h;
  h.space = WarpedMaternParams::unwarped(1, 0.05);
  h.space.mean = 0.5;
  h.curve = {.alpha = 1.0, .beta = 1.0, .noise_var = 1e-4};
  CurveSet data(1);
  data.add_curve(0, VectorXd::Constant(1, 0.1), std::vector<double>(60, 0.3));
  data.add_curve(1, VectorXd::Constant(1, 0.5), std::vector<double>(60, 0.9));
  data.add_curve(2, VectorXd::Constant(1, 0.9), std::vector<double>{0.6, 0.45, 0.37});
  const std::vector<FtgpModel> models{fit(data, h)};
  const auto basket = build_basket(models, data, Points{}, 10, 0);
  std::mt19937_64 rng(1);
  const auto scores = score_actions(models, data, basket, 10, 10000, rng);
  EXPECT_EQ(basket.old_members[select_action(scores)], 2u);
}

TEST(StateDocument, FreshRoundTrip) {
  const auto s = make_state(box(), light_settings(), 9);
  const auto doc = save_state(s);
  const auto t = load_state(doc);
  EXPECT_EQ(save_state(t), doc);
  EXPECT_EQ(t.bounds, s.bounds);
  EXPECT_EQ(t.settings, s.settings);
  EXPECT_EQ(t.seed, 9u);
}

TEST(StateDocument, MidRunRoundTripIsBitExact) {
  auto s = make_state(box(), light_settings(), 10);
  s.settings.epochs_per_decision = 2;
  drive(s, 20);
  EXPECT_EQ(s.data.total_observations(), 40u);
  EXPECT_GE(s.data.size(), 2u);
  auto t = load_state(save_state(s));
  ASSERT_EQ(t.data.size(), s.data.size());
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    EXPECT_EQ(t.data[i].x, s.data[i].x);
    EXPECT_EQ(t.data[i].y, s.data[i].y);
  }
  ASSERT_TRUE(t.chain && s.chain);
  EXPECT_EQ(t.chain->curve.alpha, s.chain->curve.alpha);
  EXPECT_EQ(t.chain->space.length_scales, s.chain->space.length_scales);
  EXPECT_EQ(suggest(t), suggest(s));
  EXPECT_EQ(save_state(t), save_state(s));
}

TEST(StateDocument, RejectsCorruptAndForeignDocuments) {
  auto s = make_state(box(), light_settings(), 11);
  drive(s, 3);
  const auto doc = save_state(s);
  EXPECT_THROW(load_state(doc.substr(0, doc.size() / 2)), StateError);
  EXPECT_THROW(load_state("{}"), StateError);
  auto j = nlohmann::json::parse(doc);
  j["version"] = 2;
  try {
    load_state(j.dump());
    FAIL();
  } catch (const StateError& e) {
    EXPECT_NE(std::string(e.what()).find("version 2"), std::string::npos);
  }
  j = nlohmann::json::parse(doc);
  j["curves"][0]["y"][0] = "oops";
  EXPECT_THROW(load_state(j.dump()), StateError);
  j = nlohmann::json::parse(doc);
  j["next_id"] = 0;
  EXPECT_THROW(load_state(j.dump()), StateError);
}

TEST(StateDocument, FileWriteIsAtomicReplace) {
  const auto dir = std::filesystem::temp_directory_path() / "ftbo_state_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "state.json";
  auto s = make_state(box(), light_settings(), 12);
  write_state_file(s, path);
  drive(s, 2);
  write_state_file(s, path);
  EXPECT_FALSE(std::filesystem::exists(dir / "state.json.tmp"));
  EXPECT_EQ(save_state(read_state_file(path)), save_state(s));
  std::filesystem::remove_all(dir);
}

TEST(Protocol, NumbersCarrySeventeenDigits) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
  const Action a{ActionKind::resume, 4, Eigen::Vector2d(0.1, -2.5), 1};
  const auto j = nlohmann::json::parse(action_response(a));
  EXPECT_EQ(j["action"], "resume");
  EXPECT_EQ(j["config_id"], 4);
  EXPECT_EQ(j["x"][0].get<double>(), 0.1);
  EXPECT_EQ(j["epochs"], 1);
}

TEST(Protocol, SessionAnswersAndPersists) {
  const auto dir = std::filesystem::temp_directory_path() / "ftbo_session_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "state.json";
  Session session(make_state(box(), light_settings(), 13), path);

  auto reply = nlohmann::json::parse(session.handle(R"({"op":"suggest"})"));
  EXPECT_EQ(reply["action"], "start");
  const auto id = reply["config_id"].get<ConfigId>();
  EXPECT_EQ(save_state(read_state_file(path)), save_state(session.state()));

  const auto before = save_state(session.state());
  for (const char* bad : {"not json", "[1,2]", R"({"op":"fly"})", R"({"op":"observe","config_id":99,"epoch":1,"loss":1})",
                          R"({"op":"observe","config_id":0,"epoch":2,"loss":1})",
                          R"({"op":"observe","config_id":0,"epoch":1,"loss":"x"})"}) {
    const auto r = nlohmann::json::parse(session.handle(bad));
    EXPECT_EQ(r["status"], "error") << bad;
    EXPECT_FALSE(r["message"].get<std::string>().empty());
    EXPECT_EQ(save_state(session.state()), before);
  }

  reply = nlohmann::json::parse(
      session.handle(R"({"op":"observe","config_id":)" + std::to_string(id) + R"(,"epoch":1,"loss":0.25})"));
  EXPECT_EQ(reply["status"], "ok");
  EXPECT_EQ(session.state().data[0].y, std::vector<double>{0.25});
  EXPECT_EQ(save_state(read_state_file(path)), save_state(session.state()));

  // Restart from the file: same next suggestion.
  Session restarted(read_state_file(path), path);
  const auto again = restarted.handle(R"({"op":"suggest"})");
  EXPECT_EQ(again, session.handle(R"({"op":"suggest"})"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace ftbo
