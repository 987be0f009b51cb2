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

#ifndef COOP__COORDINATOR_HPP_
#define COOP__COORDINATOR_HPP_

#include "coop/game.hpp"
#include "coop/mcts.hpp"
#include "coop/traffic_sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coop::coordinator
{

enum class ControllerKind : std::uint8_t { kMcts, kRuleBased };

/// One cell of the ablation matrix.
struct Variant
{
  std::string name;
  ControllerKind kind{ControllerKind::kMcts};
  bool parallel_update{false};
  bool action_preference{false};
};

/// RB, SN, SE, PN or PE.
Variant variant_from_name(std::string_view name);
const std::vector<std::string> & variant_names();

struct EpisodeSettings
{
  mcts::SearchConfig search;
  bool record_diagnostics{true};
};

struct VehicleRecord
{
  int id{0};
  sim::VehicleClass cls{sim::VehicleClass::kHdv};
  int lane{0};
  double pos_x{0.0};
  double speed{0.0};
  bool active{false};
  AgentAction action;
};

struct StepRecord
{
  int t{0};
  std::vector<VehicleRecord> vehicles;  // state at time t, action taken during the step
  game::ActionId executed_id{0};
  game::RewardBreakdown reward;
  game::TerminalKind status{game::TerminalKind::kRunning};  // after the step
  bool isolation_ok{true};
  bool warm_start{false};
  int root_visits_before{0};
  int cav_arrivals{0};
  std::optional<mcts::SearchDiagnostics> diagnostics;
};

struct EpisodeLog
{
  std::string variant;
  int episode{0};
  std::uint64_t seed{0};
  std::uint64_t initial_hash{0};
  int n_vehicles{0};
  int n_cav{0};
  std::vector<StepRecord> steps;

  game::TerminalKind final_status() const;
};

struct DecideResult
{
  game::ActionId executed_id{0};
  mcts::SearchDiagnostics diagnostics;
  bool isolation_ok{true};
  bool warm_start{false};
  int root_visits_before{0};
};

/// Search a sandbox copy of `main_state`, then advance the persistent tree
/// to the chosen child.
DecideResult decide_step(
  const sim::TrafficState & main_state, mcts::SearchTree & tree, const mcts::SearchConfig & config);

EpisodeLog run_episode(
  const sim::TrafficState & initial, const Variant & variant, const EpisodeSettings & settings,
  int episode = 0, std::uint64_t seed = 0);

/// One JSON object per step.
void write_episode_jsonl(std::ostream & out, const EpisodeLog & log);

/// Inverse of write_episode_jsonl; consecutive records of the same
/// (variant, episode) form one log.
std::vector<EpisodeLog> read_episode_jsonl(std::istream & in);

}  // namespace coop::coordinator

#endif  // COOP__COORDINATOR_HPP_
