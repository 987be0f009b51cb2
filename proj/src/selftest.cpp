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


#include "coop/selftest.hpp"

#include "coop/config.hpp"
#include "coop/coordinator.hpp"
#include "coop/game.hpp"
#include "coop/harness.hpp"

#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace coop
{

namespace
{

bool encoding_round_trip()
{
  const std::vector<AgentAction> anchor(2, AgentAction{Lon::kAccelerate, Lat::kKeep});
  if (game::encode_action(anchor) != 50) {
    return false;
  }
  for (game::ActionId id = 0; id < game::joint_action_count(2); ++id) {
    if (game::encode_action(game::decode_action(id, 2)) != id) {
      return false;
    }
  }
  return true;
}

bool ttc_bound()
{
  double worst = 0.0;
  for (int vi = 0; 8.33 + vi * 0.1 <= 16.67 + 1e-9; ++vi) {
    for (int ai = 0; 1.0 + ai * 0.1 <= 3.5 + 1e-9; ++ai) {
      worst = std::max(worst, game::ttc_relative_error(20.0, 0.1, 8.33 + vi * 0.1, 1.0 + ai * 0.1));
    }
  }
  return worst < 0.15;
}

bool parallel_set_anchor()
{
  const auto groups = game::lateral_groups(20, 0, 2);
  const auto literal = game::parallel_exclusions(20, 0, 2, game::ExclusionPolicy::kDecelWithKeep);
  return groups == std::vector<int>{0, 3, 6} &&
         game::parallel_set(20, 0, 2, game::ExclusionPolicy::kExcludeDecel).size() == 17 &&
         literal == std::vector<game::ActionId>{9, 36, 63};
}

bool hdv_only_collision_free()
{
  const sim::SimParams params;
  for (int k = 0; k < 10; ++k) {
    harness::ScenarioSpec spec;
    spec.n_hdv = 4;
    spec.n_cav = 1;
    spec.seed = harness::episode_seed(7, k);
    sim::TrafficState state = harness::generate_scenario(spec);
    std::erase_if(state.vehicles, [](const auto & v) { return v.cls == sim::VehicleClass::kCav; });
    for (int t = 0; t < 90; ++t) {
      if (!sim::step_in_place(state, {}, params).collisions.empty()) {
        return false;
      }
    }
  }
  return true;
}

bool search_isolation_and_replay()
{
  coordinator::EpisodeSettings settings;
  settings.search.n_rollout = 20;
  settings.search.horizon = 8;
  const auto state = harness::generate_scenario(harness::ScenarioSpec{});
  const auto log = coordinator::run_episode(state, coordinator::variant_from_name("PE"), settings);
  for (const auto & rec : log.steps) {
    if (!rec.isolation_ok) {
      return false;
    }
  }
  std::stringstream buf;
  coordinator::write_episode_jsonl(buf, log);
  const auto reloaded = coordinator::read_episode_jsonl(buf);
  if (reloaded.size() != 1) {
    return false;
  }
  const auto a = harness::compute_metrics(std::span(&log, 1));
  const auto b = harness::compute_metrics(reloaded);
  return a.ats == b.ats && a.velo == b.velo && a.mean_depth_by_step == b.mean_depth_by_step &&
         a.episode_returns == b.episode_returns;
}

bool config_echo_round_trip()
{
  config::RunConfig original;
  original.c_puct = 17.25;
  original.variants = {"SN", "PE"};
  original.sweep_w3 = {-25.0, -50.0};
  config::RunConfig parsed;
  config::apply_text(parsed, config::echo(original), "echo");
  return parsed == original;
}

}  // namespace

int run_selftest(std::ostream & out)
{
  const std::vector<std::pair<std::string, std::function<bool()>>> checks{
    {"encoding anchor and round trip", encoding_round_trip},
    {"ttc similarity bound", ttc_bound},
    {"parallel set anchor", parallel_set_anchor},
    {"hdv-only episodes collision free", hdv_only_collision_free},
    {"search isolation and log replay", search_isolation_and_replay},
    {"config echo round trip", config_echo_round_trip},
  };
  int failures = 0;
  for (const auto & [name, check] : checks) {
    bool ok = false;
    try {
      ok = check();
    } catch (const std::exception & e) {
      out << "error: " << name << ": " << e.what() << '\n';
    }
    out << (ok ? "ok   " : "FAIL ") << name << '\n';
    failures += ok ? 0 : 1;
  }
  return failures;
}

}  // namespace coop
