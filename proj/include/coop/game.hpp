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

#ifndef COOP__GAME_HPP_
#define COOP__GAME_HPP_

#include "coop/action.hpp"
#include "coop/traffic_sim.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace coop::game
{

using ActionId = std::uint32_t;

inline constexpr int kActionsPerAgent = 9;

/// Number of joint actions for `n_agents` CAVs (9^N).
ActionId joint_action_count(int n_agents);

/// Per-agent digit: 3 * (lat + 1) + (lon + 1).
int agent_digit(AgentAction action);
AgentAction agent_action_from_digit(int digit);

/// Joint id with agent 0 as the least-significant base-9 digit.
ActionId encode_action(std::span<const AgentAction> per_agent);
std::vector<AgentAction> decode_action(ActionId id, int n_agents);
AgentAction agent_component(ActionId id, int agent);

struct RewardWeights
{
  double w1{1.0};
  double w2{30.0};
  double w3{-50.0};
  double w4{2.0};
  double r_speed{10.0};
  double v_thres{28.0};

  void validate() const;
};

struct RewardBreakdown
{
  double speed{0.0};      // w1 * sum of per-vehicle speed rewards
  double arrival{0.0};    // w2 * N_arrived
  double collision{0.0};  // w3 * N_collision
  double lane_keep{0.0};  // w4 * N_LK
  double total{0.0};      // (speed + arrival + collision + lane_keep) / N
  int n_speed{0};
  int n_arrived{0};
  int n_collision{0};
  int n_lane_keep{0};
};

/// Speed reward flag of one realized action.
bool speed_reward_flag(const sim::RealizedAction & realized, const RewardWeights & weights);

RewardBreakdown reward_breakdown(
  const sim::StepOutcome & outcome, const RewardWeights & weights, int n_vehicles);

double compute_reward(const sim::StepOutcome & outcome, const RewardWeights & weights, int n_vehicles);

/// Legality mask over all joint ids. Agents that are no longer active may
/// only take (SK, LK).
std::vector<bool> legal_joint_actions(const sim::TrafficState & state, const sim::SimParams & params);

enum class TerminalKind : std::uint8_t { kRunning, kCollision, kAllArrived, kHorizonReached };

std::string_view to_string(TerminalKind kind);

TerminalKind is_terminal(const sim::TrafficState & state, int horizon);

/// Time to collision; +inf when the gap is not closing.
double ttc(double distance, double closing_speed);

/// Relative TTC error between keeping speed and accelerating by `a` over one
/// decision interval `tau`.
double ttc_relative_error(double gap, double tau, double closing_speed, double a);

/// Lateral group index: sum over agents of 3^k * (lat_k + 1).
int group_of(ActionId id, int n_agents);

/// Groups whose `agent` lateral component matches that of `id`.
std::vector<int> lateral_groups(ActionId id, int agent, int n_agents);

enum class ExclusionPolicy : std::uint8_t {
  kExcludeDecel,  // drop every id where the offending agent decelerates
  kDecelWithKeep,  // drop ids where the offending agent decelerates and all others keep speed
};

/// Joint ids that share the offending agent's lateral maneuver with `id`,
/// minus `id` and minus the exclusion set.
std::vector<ActionId> parallel_set(
  ActionId id, int offending_agent, int n_agents, ExclusionPolicy policy);

/// Ids removed from the lateral family by `policy` (for inspection).
std::vector<ActionId> parallel_exclusions(
  ActionId id, int offending_agent, int n_agents, ExclusionPolicy policy);

inline constexpr double kPriorFloor = 0.1;

enum class PreferenceScale : std::uint8_t {
  kPerVehicle,  // divided by the vehicle count, like the step reward
  kRaw,
};

/// Experiential preference of an unexecuted joint action: speed and
/// lane-keep terms of the reward for the CAVs' own components.
double preference_score(
  ActionId id, const sim::TrafficState & state, const RewardWeights & weights,
  PreferenceScale scale = PreferenceScale::kPerVehicle);

/// Scores floored at kPriorFloor and normalized over the legal ids; zero elsewhere.
std::vector<double> prior_probabilities(
  const std::vector<bool> & mask, const sim::TrafficState & state, const RewardWeights & weights,
  PreferenceScale scale = PreferenceScale::kPerVehicle);

}  // namespace coop::game

#endif  // COOP__GAME_HPP_
