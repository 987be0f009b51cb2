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

#include "coop/game.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace coop::game
{

namespace
{

constexpr double kLegalityTolerance = 1e-9;

void check_agents(int n_agents)
{
  if (n_agents < 0 || n_agents > 9) {
    throw std::invalid_argument("joint action space supports 0..9 agents");
  }
}

ActionId pow9(int k)
{
  ActionId p = 1;
  for (int i = 0; i < k; ++i) {
    p *= kActionsPerAgent;
  }
  return p;
}

bool agent_is_active(const sim::TrafficState & state, std::size_t vehicle_index)
{
  return state.vehicles[vehicle_index].active();
}

}  // namespace

ActionId joint_action_count(int n_agents)
{
  check_agents(n_agents);
  return pow9(n_agents);
}

int agent_digit(AgentAction action)
{
  return 3 * (to_int(action.lat) + 1) + (to_int(action.lon) + 1);
}

AgentAction agent_action_from_digit(int digit)
{
  if (digit < 0 || digit >= kActionsPerAgent) {
    throw std::out_of_range("agent action digit out of range");
  }
  return AgentAction{static_cast<Lon>(digit % 3 - 1), static_cast<Lat>(digit / 3 - 1)};
}

ActionId encode_action(std::span<const AgentAction> per_agent)
{
  check_agents(static_cast<int>(per_agent.size()));
  ActionId id = 0;
  ActionId place = 1;
  for (const auto & a : per_agent) {
    id += static_cast<ActionId>(agent_digit(a)) * place;
    place *= kActionsPerAgent;
  }
  return id;
}

std::vector<AgentAction> decode_action(ActionId id, int n_agents)
{
  if (id >= joint_action_count(n_agents)) {
    throw std::out_of_range("joint action id out of range");
  }
  std::vector<AgentAction> out;
  out.reserve(static_cast<std::size_t>(n_agents));
  for (int k = 0; k < n_agents; ++k) {
    out.push_back(agent_action_from_digit(static_cast<int>(id % kActionsPerAgent)));
    id /= kActionsPerAgent;
  }
  return out;
}

AgentAction agent_component(ActionId id, int agent)
{
  return agent_action_from_digit(static_cast<int>((id / pow9(agent)) % kActionsPerAgent));
}

void RewardWeights::validate() const
{
  if (!(w3 < 0.0)) {
    throw std::invalid_argument("w3 must be negative");
  }
}

bool speed_reward_flag(const sim::RealizedAction & realized, const RewardWeights & weights)
{
  return realized.action.lon == Lon::kAccelerate ||
         (realized.action.lon == Lon::kKeep && realized.speed_before > weights.v_thres);
}

RewardBreakdown reward_breakdown(
  const sim::StepOutcome & outcome, const RewardWeights & weights, int n_vehicles)
{
  if (n_vehicles < 1) {
    throw std::invalid_argument("reward needs at least one vehicle");
  }
  RewardBreakdown r;
  for (const auto & realized : outcome.realized) {
    r.n_speed += speed_reward_flag(realized, weights) ? 1 : 0;
    r.n_lane_keep += realized.action.lat == Lat::kKeep ? 1 : 0;
  }
  r.n_arrived = static_cast<int>(outcome.arrivals.size());
  r.n_collision = static_cast<int>(outcome.collided_vehicles.size());
  r.speed = weights.w1 * weights.r_speed * r.n_speed;
  r.arrival = weights.w2 * r.n_arrived;
  r.collision = weights.w3 * r.n_collision;
  r.lane_keep = weights.w4 * r.n_lane_keep;
  r.total = (r.speed + r.arrival + r.collision + r.lane_keep) / n_vehicles;
  return r;
}

double compute_reward(const sim::StepOutcome & outcome, const RewardWeights & weights, int n_vehicles)
{
  return reward_breakdown(outcome, weights, n_vehicles).total;
}

std::vector<bool> legal_joint_actions(const sim::TrafficState & state, const sim::SimParams & params)
{
  const std::vector<std::size_t> cavs = state.cav_indices();
  const int n_agents = static_cast<int>(cavs.size());
  const ActionId count = joint_action_count(n_agents);

  std::vector<std::array<bool, kActionsPerAgent>> digit_ok(cavs.size());
  for (std::size_t k = 0; k < cavs.size(); ++k) {
    const sim::VehicleState & v = state.vehicles[cavs[k]];
    for (int d = 0; d < kActionsPerAgent; ++d) {
      const AgentAction a = agent_action_from_digit(d);
      bool ok = true;
      if (!agent_is_active(state, cavs[k])) {
        ok = a == AgentAction{};
      } else {
        const int lane = v.lane + lane_delta(a.lat);
        ok = lane >= 0 && lane < state.road.lane_count;
        if (a.lon == Lon::kAccelerate &&
            v.speed + params.cav.accel * params.dt > params.cav.v_max + kLegalityTolerance) {
          ok = false;
        }
      }
      digit_ok[k][static_cast<std::size_t>(d)] = ok;
    }
  }

  std::vector<bool> mask(count, true);
  for (ActionId id = 0; id < count; ++id) {
    ActionId rest = id;
    for (std::size_t k = 0; k < cavs.size(); ++k) {
      if (!digit_ok[k][rest % kActionsPerAgent]) {
        mask[id] = false;
        break;
      }
      rest /= kActionsPerAgent;
    }
  }
  const ActionId idle = encode_action(std::vector<AgentAction>(cavs.size()));
  if (!mask[idle]) {
    throw std::logic_error("legal_joint_actions: idle joint action masked");
  }
  return mask;
}

std::string_view to_string(TerminalKind kind)
{
  switch (kind) {
    case TerminalKind::kCollision:
      return "Collision";
    case TerminalKind::kAllArrived:
      return "AllArrived";
    case TerminalKind::kHorizonReached:
      return "HorizonReached";
    case TerminalKind::kRunning:
      break;
  }
  return "Running";
}

TerminalKind is_terminal(const sim::TrafficState & state, int horizon)
{
  bool any_cav = false;
  bool all_arrived = true;
  for (const auto & v : state.vehicles) {
    if (v.collided) {
      return TerminalKind::kCollision;
    }
    if (v.cls == sim::VehicleClass::kCav) {
      any_cav = true;
      all_arrived = all_arrived && v.arrived;
    }
  }
  if (any_cav && all_arrived) {
    return TerminalKind::kAllArrived;
  }
  if (state.time_step >= horizon) {
    return TerminalKind::kHorizonReached;
  }
  return TerminalKind::kRunning;
}

double ttc(double distance, double closing_speed)
{
  if (closing_speed <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return distance / closing_speed;
}

double ttc_relative_error(double gap, double tau, double closing_speed, double a)
{
  if (closing_speed == 0.0) {
    throw std::domain_error("ttc_relative_error: zero closing speed");
  }
  const double v = closing_speed;
  const double keep = (gap - v * tau) / v;
  const double accel = (gap - (v + 0.5 * a * tau) * tau) / (v + a * tau);
  return (keep - accel) / keep;
}

int group_of(ActionId id, int n_agents)
{
  int group = 0;
  int place = 1;
  for (int k = 0; k < n_agents; ++k) {
    group += place * (to_int(agent_component(id, k).lat) + 1);
    place *= 3;
  }
  return group;
}

std::vector<int> lateral_groups(ActionId id, int agent, int n_agents)
{
  const int lat_digit = to_int(agent_component(id, agent).lat) + 1;
  int groups = 1;
  for (int k = 0; k < n_agents; ++k) {
    groups *= 3;
  }
  int place = 1;
  for (int k = 0; k < agent; ++k) {
    place *= 3;
  }
  std::vector<int> out;
  for (int g = 0; g < groups; ++g) {
    if ((g / place) % 3 == lat_digit) {
      out.push_back(g);
    }
  }
  return out;
}

namespace
{

bool excluded(ActionId candidate, int agent, int n_agents, ExclusionPolicy policy)
{
  if (agent_component(candidate, agent).lon != Lon::kDecelerate) {
    return false;
  }
  if (policy == ExclusionPolicy::kExcludeDecel) {
    return true;
  }
  for (int k = 0; k < n_agents; ++k) {
    if (k != agent && agent_component(candidate, k).lon != Lon::kKeep) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::vector<ActionId> parallel_set(
  ActionId id, int offending_agent, int n_agents, ExclusionPolicy policy)
{
  if (offending_agent < 0 || offending_agent >= n_agents) {
    throw std::out_of_range("parallel_set: offending agent out of range");
  }
  const ActionId count = joint_action_count(n_agents);
  const Lat lat = agent_component(id, offending_agent).lat;
  std::vector<ActionId> out;
  for (ActionId j = 0; j < count; ++j) {
    if (j == id || agent_component(j, offending_agent).lat != lat) {
      continue;
    }
    if (!excluded(j, offending_agent, n_agents, policy)) {
      out.push_back(j);
    }
  }
  return out;
}

std::vector<ActionId> parallel_exclusions(
  ActionId id, int offending_agent, int n_agents, ExclusionPolicy policy)
{
  const ActionId count = joint_action_count(n_agents);
  const Lat lat = agent_component(id, offending_agent).lat;
  std::vector<ActionId> out;
  for (ActionId j = 0; j < count; ++j) {
    if (agent_component(j, offending_agent).lat == lat &&
        excluded(j, offending_agent, n_agents, policy)) {
      out.push_back(j);
    }
  }
  return out;
}

double preference_score(
  ActionId id, const sim::TrafficState & state, const RewardWeights & weights, PreferenceScale scale)
{
  const std::vector<std::size_t> cavs = state.cav_indices();
  double score = 0.0;
  for (std::size_t k = 0; k < cavs.size(); ++k) {
    const sim::VehicleState & v = state.vehicles[cavs[k]];
    if (!v.active()) {
      continue;
    }
    const AgentAction a = agent_component(id, static_cast<int>(k));
    const bool speed = a.lon == Lon::kAccelerate || (a.lon == Lon::kKeep && v.speed > weights.v_thres);
    score += weights.w1 * (speed ? weights.r_speed : 0.0);
    score += weights.w4 * (a.lat == Lat::kKeep ? 1.0 : 0.0);
  }
  if (scale == PreferenceScale::kPerVehicle && !state.vehicles.empty()) {
    score /= static_cast<double>(state.vehicles.size());
  }
  return score;
}

std::vector<double> prior_probabilities(
  const std::vector<bool> & mask, const sim::TrafficState & state, const RewardWeights & weights,
  PreferenceScale scale)
{
  std::vector<double> p(mask.size(), 0.0);
  double total = 0.0;
  for (ActionId id = 0; id < mask.size(); ++id) {
    if (mask[id]) {
      p[id] = std::max(preference_score(id, state, weights, scale), kPriorFloor);
      total += p[id];
    }
  }
  if (total <= 0.0) {
    throw std::invalid_argument("prior_probabilities: no legal action");
  }
  for (double & x : p) {
    x /= total;
  }
  return p;
}

}  // namespace coop::game
