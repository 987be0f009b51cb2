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

#ifndef COOP__TRAFFIC_SIM_HPP_
#define COOP__TRAFFIC_SIM_HPP_

#include "coop/action.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace coop::sim
{

enum class VehicleClass : std::uint8_t { kHdv, kCav };

/// Goal of a vehicle. A vehicle arrives when its front bumper passes
/// target_x while it occupies target_lane (if one is set).
struct Intention
{
  double target_x{0.0};
  std::optional<int> target_lane;
};

struct VehicleState
{
  int id{0};
  VehicleClass cls{VehicleClass::kHdv};
  int lane{0};
  double pos_x{0.0};  // front bumper
  double speed{0.0};
  double length{5.0};
  std::optional<Intention> intention;
  bool arrived{false};
  bool exited{false};    // left the road without meeting an intention
  bool collided{false};  // frozen in place

  bool on_road() const noexcept { return !arrived && !exited; }
  bool active() const noexcept { return on_road() && !collided; }
  double rear() const noexcept { return pos_x - length; }
};

struct RoadSpec
{
  double length{300.0};
  int lane_count{3};

  void validate() const;
};

struct HdvParams
{
  double b{9.0};       // maximum deceleration
  double tau_k{1.1};   // reaction time
  double eps{0.5};     // imperfection magnitude
  double a_max{2.6};
  double v_max{30.0};

  void validate() const;
};

struct CavParams
{
  double accel{3.5};
  double decel{3.5};
  double v_max{30.0};

  void validate() const;
};

struct SimParams
{
  double dt{0.1};
  HdvParams hdv;
  CavParams cav;
  /// Minimum anticipated speed gain (m/s) before a model driver requests a lane change.
  double lc_hysteresis{1.0};
  /// Rule-based CAVs bias lane choice toward their target lane inside this range.
  double intention_bias_range{100.0};
  double intention_bias{100.0};

  void validate() const;
};

struct TrafficState
{
  std::vector<VehicleState> vehicles;
  int time_step{0};
  std::uint64_t noise_seed{0};
  RoadSpec road;

  const VehicleState * find(int id) const;
  /// Vehicle indices of CAVs in agent order (order of appearance).
  std::vector<std::size_t> cav_indices() const;
  int cav_count() const;
};

/// Per-CAV command. std::nullopt hands the CAV to the driver models.
using CavCommand = std::optional<AgentAction>;

struct RealizedAction
{
  int vehicle_id{0};
  VehicleClass cls{VehicleClass::kHdv};
  AgentAction action;
  double speed_before{0.0};
};

struct StepOutcome
{
  /// Newly formed collisions this step, as (lower id, higher id).
  std::vector<std::pair<int, int>> collisions;
  /// Vehicles that collided for the first time this step.
  std::vector<int> collided_vehicles;
  std::vector<int> arrivals;
  std::vector<int> exits;
  /// One entry per vehicle that was active at the start of the step.
  std::vector<RealizedAction> realized;

  const RealizedAction * realized_for(int vehicle_id) const;
};

double krauss_safe_velocity(double b, double tau_k, double v_leader, double gap);

double krauss_desired_velocity(double v, double v_max, double a_max, double v_safe, double dt);

double apply_driver_imperfection(double v_tilde, double a_max, double dt, double eps, double xi);

/// Imperfection sample of one vehicle at one time step. Streams are keyed by
/// (noise_seed, vehicle_id) so adding a vehicle leaves the others untouched.
double imperfection_sample(std::uint64_t noise_seed, int vehicle_id, int time_step);

/// Lane-change decision of the driver model for vehicle `index`.
Lat model_lane_change_decision(
  const TrafficState & state, std::size_t index, const SimParams & params, bool intention_bias);

/// HDV lane-change decision by vehicle id.
Lat hdv_lane_change_decision(const TrafficState & state, int vehicle_id, const SimParams & params);

/// All overlapping same-lane pairs among vehicles on the road.
std::vector<std::pair<int, int>> detect_collisions(const TrafficState & state);

/// Advance `state` by one interval. `commands` holds one entry per CAV in
/// agent order; commands for inactive CAVs are ignored.
StepOutcome step_in_place(
  TrafficState & state, std::span<const CavCommand> commands, const SimParams & params);

std::pair<TrafficState, StepOutcome> step(
  const TrafficState & state, std::span<const CavCommand> commands, const SimParams & params);

std::pair<TrafficState, StepOutcome> step(
  const TrafficState & state, std::span<const AgentAction> actions, const SimParams & params);

/// FNV-1a over every field that influences evolution.
std::uint64_t state_hash(const TrafficState & state);

}  // namespace coop::sim

#endif  // COOP__TRAFFIC_SIM_HPP_
