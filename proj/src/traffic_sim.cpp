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

#include "coop/traffic_sim.hpp"

#include "coop/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace coop::sim
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSpeedDeadband = 0.01;

void require(bool ok, const char * what)
{
  if (!ok) {
    throw std::invalid_argument(what);
  }
}

bool overlaps(double rear_a, double front_a, double rear_b, double front_b)
{
  return rear_a < front_b && rear_b < front_a;
}

struct LaneView
{
  const VehicleState * leader{nullptr};
  const VehicleState * follower{nullptr};
  bool blocked{false};
};

// Neighborhood of `ego` in `lane`, excluding `ego` itself.
LaneView view_lane(const TrafficState & state, const VehicleState & ego, int lane)
{
  LaneView view;
  for (const auto & other : state.vehicles) {
    if (other.id == ego.id || !other.on_road() || other.lane != lane) {
      continue;
    }
    if (lane != ego.lane && overlaps(ego.rear(), ego.pos_x, other.rear(), other.pos_x)) {
      view.blocked = true;
    }
    if (other.pos_x > ego.pos_x) {
      if (view.leader == nullptr || other.pos_x < view.leader->pos_x) {
        view.leader = &other;
      }
    } else if (lane != ego.lane || other.pos_x < ego.pos_x) {
      if (view.follower == nullptr || other.pos_x > view.follower->pos_x) {
        view.follower = &other;
      }
    }
  }
  return view;
}

double leader_gap(const VehicleState & ego, const VehicleState & leader)
{
  return std::max(0.0, leader.rear() - ego.pos_x);
}

double anticipated_speed(const VehicleState & ego, const VehicleState * leader, const SimParams & p)
{
  const double v_safe =
    leader == nullptr ? kInf
                      : krauss_safe_velocity(p.hdv.b, p.hdv.tau_k, leader->speed, leader_gap(ego, *leader));
  return krauss_desired_velocity(ego.speed, p.hdv.v_max, p.hdv.a_max, v_safe, p.dt);
}

Lon classify_speed_change(double before, double after)
{
  const double dv = after - before;
  if (dv > kSpeedDeadband) {
    return Lon::kAccelerate;
  }
  if (dv < -kSpeedDeadband) {
    return Lon::kDecelerate;
  }
  return Lon::kKeep;
}

Lat classify_lane_change(int before, int after)
{
  if (after > before) {
    return Lat::kLeft;
  }
  if (after < before) {
    return Lat::kRight;
  }
  return Lat::kKeep;
}

class Fnv1a
{
public:
  void add(std::uint64_t v)
  {
    for (int i = 0; i < 8; ++i) {
      hash_ ^= (v >> (8 * i)) & 0xffU;
      hash_ *= 0x100000001b3ULL;
    }
  }
  void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
  void add(int v) { add(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
  void add(bool v) { add(static_cast<std::uint64_t>(v ? 1 : 0)); }
  std::uint64_t value() const { return hash_; }

private:
  std::uint64_t hash_{0xcbf29ce484222325ULL};
};

}  // namespace

void RoadSpec::validate() const
{
  require(length > 0.0, "road length must be positive");
  require(lane_count >= 1, "lane_count must be at least 1");
}

void HdvParams::validate() const
{
  require(b > 0.0 && tau_k > 0.0 && a_max > 0.0 && v_max > 0.0, "HDV parameters must be positive");
  require(eps >= 0.0 && eps <= 1.0, "eps must lie in [0, 1]");
}

void CavParams::validate() const
{
  require(accel > 0.0 && decel > 0.0 && v_max > 0.0, "CAV parameters must be positive");
}

void SimParams::validate() const
{
  require(dt > 0.0, "dt must be positive");
  hdv.validate();
  cav.validate();
  require(lc_hysteresis >= 0.0, "lc_hysteresis must be non-negative");
}

const VehicleState * TrafficState::find(int id) const
{
  for (const auto & v : vehicles) {
    if (v.id == id) {
      return &v;
    }
  }
  return nullptr;
}

std::vector<std::size_t> TrafficState::cav_indices() const
{
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    if (vehicles[i].cls == VehicleClass::kCav) {
      out.push_back(i);
    }
  }
  return out;
}

int TrafficState::cav_count() const
{
  return static_cast<int>(std::count_if(vehicles.begin(), vehicles.end(), [](const auto & v) {
    return v.cls == VehicleClass::kCav;
  }));
}

const RealizedAction * StepOutcome::realized_for(int vehicle_id) const
{
  for (const auto & r : realized) {
    if (r.vehicle_id == vehicle_id) {
      return &r;
    }
  }
  return nullptr;
}

double krauss_safe_velocity(double b, double tau_k, double v_leader, double gap)
{
  if (gap < 0.0) {
    throw std::domain_error("krauss_safe_velocity: negative gap " + std::to_string(gap));
  }
  const double bt = b * tau_k;
  return std::max(0.0, -bt + std::sqrt(bt * bt + v_leader * v_leader + 2.0 * b * gap));
}

double krauss_desired_velocity(double v, double v_max, double a_max, double v_safe, double dt)
{
  return std::min({v_max, v + a_max * dt, v_safe});
}

double apply_driver_imperfection(double v_tilde, double a_max, double dt, double eps, double xi)
{
  return std::max(0.0, v_tilde - a_max * dt * eps * xi);
}

double imperfection_sample(std::uint64_t noise_seed, int vehicle_id, int time_step)
{
  const std::uint64_t stream = derive_seed(noise_seed, static_cast<std::uint64_t>(vehicle_id));
  return counter_uniform(stream, static_cast<std::uint64_t>(time_step));
}

Lat model_lane_change_decision(
  const TrafficState & state, std::size_t index, const SimParams & params, bool intention_bias)
{
  const VehicleState & ego = state.vehicles.at(index);
  if (!ego.active()) {
    return Lat::kKeep;
  }

  // Intention bias: reward lanes that approach the target lane, penalize the rest.
  const auto bias_for = [&](int lane) {
    if (!intention_bias || !ego.intention || !ego.intention->target_lane) {
      return 0.0;
    }
    if (ego.intention->target_x - ego.pos_x > params.intention_bias_range) {
      return 0.0;
    }
    const int target = *ego.intention->target_lane;
    const int now = std::abs(ego.lane - target);
    const int then = std::abs(lane - target);
    if (then < now) {
      return params.intention_bias;
    }
    if (then > now) {
      return -params.intention_bias;
    }
    return 0.0;
  };

  // Steps 1-2: anticipated speed in the current lane.
  const LaneView own = view_lane(state, ego, ego.lane);
  const double own_score = anticipated_speed(ego, own.leader, params) + bias_for(ego.lane);

  // Step 3: change request if a neighbor lane beats the current one by the
  // hysteresis margin and the target-lane follower keeps its safe speed.
  Lat choice = Lat::kKeep;
  double best = own_score + params.lc_hysteresis;
  for (const Lat lat : {Lat::kLeft, Lat::kRight}) {
    const int lane = ego.lane + lane_delta(lat);
    if (lane < 0 || lane >= state.road.lane_count) {
      continue;
    }
    const LaneView view = view_lane(state, ego, lane);
    if (view.blocked) {
      continue;
    }
    if (view.follower != nullptr) {
      const double gap = ego.rear() - view.follower->pos_x;
      if (gap <= 0.0) {
        continue;
      }
      const double follower_safe =
        krauss_safe_velocity(params.hdv.b, params.hdv.tau_k, ego.speed, gap);
      if (follower_safe < view.follower->speed) {
        continue;
      }
    }
    const double score = anticipated_speed(ego, view.leader, params) + bias_for(lane);
    if (score > best) {
      best = score;
      choice = lat;
    }
  }
  // Step 4: the lateral action is emitted; speed adaptation happens in the
  // car-following update.
  return choice;
}

Lat hdv_lane_change_decision(const TrafficState & state, int vehicle_id, const SimParams & params)
{
  for (std::size_t i = 0; i < state.vehicles.size(); ++i) {
    if (state.vehicles[i].id == vehicle_id) {
      if (state.vehicles[i].cls != VehicleClass::kHdv) {
        throw std::invalid_argument("hdv_lane_change_decision: vehicle is not an HDV");
      }
      return model_lane_change_decision(state, i, params, false);
    }
  }
  throw std::invalid_argument("hdv_lane_change_decision: unknown vehicle id");
}

std::vector<std::pair<int, int>> detect_collisions(const TrafficState & state)
{
  std::vector<std::pair<int, int>> pairs;
  const auto & vs = state.vehicles;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (!vs[i].on_road()) {
      continue;
    }
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      if (!vs[j].on_road() || vs[i].lane != vs[j].lane) {
        continue;
      }
      if (overlaps(vs[i].rear(), vs[i].pos_x, vs[j].rear(), vs[j].pos_x)) {
        pairs.emplace_back(std::min(vs[i].id, vs[j].id), std::max(vs[i].id, vs[j].id));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

StepOutcome step_in_place(
  TrafficState & state, std::span<const CavCommand> commands, const SimParams & params)
{
  auto & vs = state.vehicles;
  const std::size_t n = vs.size();
  const std::vector<std::size_t> cavs = state.cav_indices();
  if (commands.size() != cavs.size()) {
    throw std::invalid_argument("step: expected one command per CAV");
  }

  // Command slot per vehicle; CAVs without a command are model-driven.
  std::vector<const AgentAction *> commanded(n, nullptr);
  for (std::size_t k = 0; k < cavs.size(); ++k) {
    if (commands[k]) {
      commanded[cavs[k]] = &*commands[k];
    }
  }

  std::vector<int> lane_before(n);
  std::vector<double> speed_before(n);
  std::vector<bool> active_before(n);
  std::vector<bool> collided_before(n);
  for (std::size_t i = 0; i < n; ++i) {
    lane_before[i] = vs[i].lane;
    speed_before[i] = vs[i].speed;
    active_before[i] = vs[i].active();
    collided_before[i] = vs[i].collided;
  }

  // Lateral: commanded CAVs switch first, then model drivers decide in order
  // against the lanes already chosen this step.
  for (std::size_t i = 0; i < n; ++i) {
    if (active_before[i] && commanded[i] != nullptr) {
      const int lane = vs[i].lane + lane_delta(commanded[i]->lat);
      if (lane < 0 || lane >= state.road.lane_count) {
        throw std::invalid_argument("step: commanded lane change leaves the road");
      }
      vs[i].lane = lane;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (active_before[i] && commanded[i] == nullptr) {
      const bool biased = vs[i].cls == VehicleClass::kCav;
      vs[i].lane += lane_delta(model_lane_change_decision(state, i, params, biased));
    }
  }

  // Longitudinal: all speeds from the same pre-move snapshot.
  std::vector<double> speed_after(speed_before);
  for (std::size_t i = 0; i < n; ++i) {
    if (!active_before[i]) {
      continue;
    }
    const VehicleState & ego = vs[i];
    if (commanded[i] != nullptr) {
      double v = ego.speed;
      if (commanded[i]->lon == Lon::kAccelerate) {
        v += params.cav.accel * params.dt;
      } else if (commanded[i]->lon == Lon::kDecelerate) {
        v -= params.cav.decel * params.dt;
      }
      speed_after[i] = std::clamp(v, 0.0, params.cav.v_max);
      continue;
    }
    const LaneView view = view_lane(state, ego, ego.lane);
    const double v_tilde = anticipated_speed(ego, view.leader, params);
    const double xi = imperfection_sample(state.noise_seed, ego.id, state.time_step);
    speed_after[i] =
      apply_driver_imperfection(v_tilde, params.hdv.a_max, params.dt, params.hdv.eps, xi);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (active_before[i]) {
      vs[i].speed = speed_after[i];
      vs[i].pos_x += speed_after[i] * params.dt;
    }
  }

  StepOutcome outcome;
  for (std::size_t i = 0; i < n; ++i) {
    if (!active_before[i]) {
      continue;
    }
    RealizedAction r;
    r.vehicle_id = vs[i].id;
    r.cls = vs[i].cls;
    r.speed_before = speed_before[i];
    r.action.lat = classify_lane_change(lane_before[i], vs[i].lane);
    r.action.lon = commanded[i] != nullptr ? commanded[i]->lon
                                           : classify_speed_change(speed_before[i], vs[i].speed);
    outcome.realized.push_back(r);
  }

  // Collisions: a pair is new unless both vehicles were already wrecked.
  for (const auto & [a, b] : detect_collisions(state)) {
    const auto idx = [&](int id) {
      return static_cast<std::size_t>(
        std::find_if(vs.begin(), vs.end(), [id](const auto & v) { return v.id == id; }) -
        vs.begin());
    };
    const std::size_t ia = idx(a);
    const std::size_t ib = idx(b);
    if (collided_before[ia] && collided_before[ib]) {
      continue;
    }
    outcome.collisions.emplace_back(a, b);
    for (const std::size_t i : {ia, ib}) {
      if (!vs[i].collided) {
        vs[i].collided = true;
        vs[i].speed = 0.0;
        outcome.collided_vehicles.push_back(vs[i].id);
      }
    }
  }
  std::sort(outcome.collided_vehicles.begin(), outcome.collided_vehicles.end());

  for (std::size_t i = 0; i < n; ++i) {
    VehicleState & v = vs[i];
    if (!active_before[i] || !v.active()) {
      continue;
    }
    const bool lane_ok =
      v.intention && (!v.intention->target_lane || *v.intention->target_lane == v.lane);
    if (v.intention && lane_ok && v.pos_x >= v.intention->target_x) {
      v.arrived = true;
      outcome.arrivals.push_back(v.id);
    } else if (v.pos_x >= state.road.length) {
      v.exited = true;
      outcome.exits.push_back(v.id);
    }
  }

  ++state.time_step;
  return outcome;
}

std::pair<TrafficState, StepOutcome> step(
  const TrafficState & state, std::span<const CavCommand> commands, const SimParams & params)
{
  TrafficState next = state;
  StepOutcome outcome = step_in_place(next, commands, params);
  return {std::move(next), std::move(outcome)};
}

std::pair<TrafficState, StepOutcome> step(
  const TrafficState & state, std::span<const AgentAction> actions, const SimParams & params)
{
  std::vector<CavCommand> commands(actions.begin(), actions.end());
  return step(state, std::span<const CavCommand>(commands), params);
}

std::uint64_t state_hash(const TrafficState & state)
{
  Fnv1a h;
  h.add(state.time_step);
  h.add(state.noise_seed);
  h.add(state.road.length);
  h.add(state.road.lane_count);
  for (const auto & v : state.vehicles) {
    h.add(v.id);
    h.add(static_cast<int>(v.cls));
    h.add(v.lane);
    h.add(v.pos_x);
    h.add(v.speed);
    h.add(v.length);
    h.add(v.intention.has_value());
    if (v.intention) {
      h.add(v.intention->target_x);
      h.add(v.intention->target_lane.value_or(-1));
    }
    h.add(v.arrived);
    h.add(v.exited);
    h.add(v.collided);
  }
  return h.value();
}

}  // namespace coop::sim
