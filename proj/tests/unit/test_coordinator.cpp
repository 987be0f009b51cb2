// Copyright 2026 The coop_mcts Authors
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


#include "coop/coordinator.hpp"
#include "coop/harness.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace coop::coordinator
{
namespace
{

using coop::testing::cav;
using coop::testing::world;

EpisodeSettings settings_with(int n_rollout)
{
  EpisodeSettings s;
  s.search.n_rollout = n_rollout;
  return s;
}

std::string to_jsonl(const EpisodeLog & log)
{
  std::ostringstream out;
  write_episode_jsonl(out, log);
  return out.str();
}

TEST(Variants, Flags)
{
  EXPECT_EQ(variant_from_name("RB").kind, ControllerKind::kRuleBased);
  const auto sn = variant_from_name("SN");
  EXPECT_FALSE(sn.parallel_update || sn.action_preference);
  const auto se = variant_from_name("SE");
  EXPECT_TRUE(!se.parallel_update && se.action_preference);
  const auto pn = variant_from_name("PN");
  EXPECT_TRUE(pn.parallel_update && !pn.action_preference);
  const auto pe = variant_from_name("PE");
  EXPECT_TRUE(pe.parallel_update && pe.action_preference);
  EXPECT_EQ(pe.kind, ControllerKind::kMcts);
  EXPECT_THROW(variant_from_name("XX"), std::invalid_argument);
  EXPECT_EQ(variant_names().size(), 5U);
}

TEST(DecideStep, LeavesMainStateUntouched)
{
  const auto s = coop::testing::mid_road_two_cavs();
  const auto before = sim::state_hash(s);
  mcts::SearchTree tree;
  mcts::SearchConfig config;
  config.n_rollout = 80;
  const auto r = decide_step(s, tree, config);
  EXPECT_TRUE(r.isolation_ok);
  EXPECT_EQ(sim::state_hash(s), before);
  EXPECT_TRUE(r.warm_start);
  EXPECT_EQ(r.root_visits_before, 0);
  EXPECT_EQ(tree.root->action_id, r.executed_id);
  EXPECT_EQ(r.diagnostics.chosen_id, r.executed_id);

  mcts::SearchTree other;
  EXPECT_EQ(decide_step(s, other, config).executed_id, r.executed_id);
}

TEST(DecideStep, WarmStartsFromChosenChild)
{
  auto s = coop::testing::mid_road_two_cavs();
  mcts::SearchTree tree;
  mcts::SearchConfig config;
  config.n_rollout = 120;
  const auto first = decide_step(s, tree, config);
  const int carried = tree.root->visits;
  EXPECT_GT(carried, 0);

  const auto actions = game::decode_action(first.executed_id, s.cav_count());
  std::vector<sim::CavCommand> commands(actions.begin(), actions.end());
  sim::step_in_place(s, commands, config.sim);
  const auto second = decide_step(s, tree, config);
  EXPECT_TRUE(second.warm_start);
  EXPECT_EQ(second.root_visits_before, carried);
}

TEST(DecideStep, TerminalStateRejected)
{
  auto s = coop::testing::mid_road_two_cavs();
  s.time_step = 90;
  mcts::SearchTree tree;
  EXPECT_THROW(decide_step(s, tree, mcts::SearchConfig{}), std::logic_error);
}

TEST(RuleBased, EmptyRoadClosedForm)
{
  auto settings = settings_with(1);
  settings.search.sim.hdv.eps = 0.0;
  const auto s = world({cav(1, 1, 10.0, 10.0, sim::Intention{290.0, std::nullopt})});
  const auto log = run_episode(s, variant_from_name("RB"), settings);
  ASSERT_EQ(log.steps.size(), 90U);
  EXPECT_EQ(log.final_status(), game::TerminalKind::kHorizonReached);
  for (const auto & rec : log.steps) {
    const double expected = std::min(30.0, 10.0 + 0.26 * rec.t);
    EXPECT_NEAR(rec.vehicles[0].speed, expected, 1e-9) << "t=" << rec.t;
    EXPECT_FALSE(rec.diagnostics.has_value());
  }
}

TEST(RuleBased, ImperfectionStaysNearSpeedLimit)
{
  const auto s = world({cav(1, 1, 10.0, 28.0, sim::Intention{290.0, std::nullopt})});
  const auto log = run_episode(s, variant_from_name("RB"), settings_with(1));
  bool reached = false;
  for (const auto & rec : log.steps) {
    const double v = rec.vehicles[0].speed;
    EXPECT_LE(v, 30.0 + 1e-9);
    if (reached) {
      EXPECT_GE(v, 30.0 - 0.13 - 1e-9) << "t=" << rec.t;
    }
    reached = reached || v >= 30.0 - 0.13;
  }
  EXPECT_TRUE(reached);
}

TEST(Episode, SearchDrivenEpisodeIsCollisionFree)
{
  harness::ScenarioSpec spec;
  const auto s = harness::generate_scenario(spec);
  const auto log = run_episode(s, variant_from_name("PE"), settings_with(200), 0, spec.seed);
  const auto status = log.final_status();
  EXPECT_TRUE(
    status == game::TerminalKind::kAllArrived || status == game::TerminalKind::kHorizonReached)
    << game::to_string(status);
  ASSERT_FALSE(log.steps.empty());
  EXPECT_LE(log.steps.size(), 90U);
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    EXPECT_EQ(log.steps[i].t, static_cast<int>(i));
    EXPECT_TRUE(log.steps[i].isolation_ok);
    EXPECT_EQ(log.steps[i].reward.n_collision, 0);
  }
  EXPECT_EQ(log.initial_hash, sim::state_hash(s));
  EXPECT_EQ(log.n_vehicles, 6);
  EXPECT_EQ(log.n_cav, 2);
}

TEST(Episode, CaseReplayIsDeterministic)
{
  const auto s = harness::generate_scenario(harness::fixed_case());
  const auto pe = variant_from_name("PE");
  const auto a = run_episode(s, pe, settings_with(40));
  const auto b = run_episode(s, pe, settings_with(40));
  EXPECT_EQ(to_jsonl(a), to_jsonl(b));
}

TEST(Jsonl, RoundTripKeepsEveryField)
{
  const auto s = harness::generate_scenario(harness::fixed_case());
  auto settings = settings_with(30);
  settings.search.horizon = 5;
  const auto log = run_episode(s, variant_from_name("SE"), settings, 3, 99);
  const std::string text = to_jsonl(log);
  std::istringstream in(text);
  const auto back = read_episode_jsonl(in);
  ASSERT_EQ(back.size(), 1U);
  EXPECT_EQ(back[0].variant, "SE");
  EXPECT_EQ(back[0].episode, 3);
  EXPECT_EQ(back[0].seed, 99U);
  EXPECT_EQ(back[0].steps.size(), log.steps.size());
  EXPECT_EQ(to_jsonl(back[0]), text);
}

TEST(Jsonl, MissingQValuesSurviveAsNan)
{
  auto s = world({cav(1, 0, 50.0, 10.0), cav(2, 2, 120.0, 10.0)});
  auto settings = settings_with(20);
  settings.search.horizon = 2;
  const auto log = run_episode(s, variant_from_name("SN"), settings);
  std::istringstream in(to_jsonl(log));
  const auto back = read_episode_jsonl(in);
  ASSERT_EQ(back.size(), 1U);
  const auto & snaps = back[0].steps.front().diagnostics->snapshots;
  ASSERT_FALSE(snaps.empty());
  int missing = 0;
  for (const double q : snaps.front().q) {
    missing += std::isnan(q) ? 1 : 0;
  }
  // Agent 0 in the rightmost lane cannot change right and agent 1 in the top lane cannot change left.
  EXPECT_EQ(missing, 81 - 36);
}

TEST(Jsonl, SeparatesConsecutiveEpisodes)
{
  auto s = world({cav(1, 1, 50.0, 10.0)});
  auto settings = settings_with(5);
  settings.search.horizon = 3;
  const auto a = run_episode(s, variant_from_name("SN"), settings, 0);
  const auto b = run_episode(s, variant_from_name("SN"), settings, 1);
  std::istringstream in(to_jsonl(a) + to_jsonl(b));
  const auto back = read_episode_jsonl(in);
  ASSERT_EQ(back.size(), 2U);
  EXPECT_EQ(back[1].episode, 1);
}

}  // namespace
}  // namespace coop::coordinator
