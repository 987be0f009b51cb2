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

#include <json.hpp>

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace coop::coordinator
{

namespace
{

using nlohmann::json;

game::TerminalKind terminal_from_string(std::string_view s)
{
  for (const auto kind :
       {game::TerminalKind::kRunning, game::TerminalKind::kCollision,
        game::TerminalKind::kAllArrived, game::TerminalKind::kHorizonReached}) {
    if (game::to_string(kind) == s) {
      return kind;
    }
  }
  throw std::runtime_error("unknown terminal status: " + std::string(s));
}

json number_or_null(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

double number_or_nan(const json & j)
{
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

Variant variant_from_name(std::string_view name)
{
  if (name == "RB") {
    return {"RB", ControllerKind::kRuleBased, false, false};
  }
  if (name == "SN") {
    return {"SN", ControllerKind::kMcts, false, false};
  }
  if (name == "SE") {
    return {"SE", ControllerKind::kMcts, false, true};
  }
  if (name == "PN") {
    return {"PN", ControllerKind::kMcts, true, false};
  }
  if (name == "PE") {
    return {"PE", ControllerKind::kMcts, true, true};
  }
  throw std::invalid_argument("unknown variant '" + std::string(name) + "' (expected RB, SN, SE, PN or PE)");
}

const std::vector<std::string> & variant_names()
{
  static const std::vector<std::string> names{"RB", "SN", "SE", "PN", "PE"};
  return names;
}

game::TerminalKind EpisodeLog::final_status() const
{
  return steps.empty() ? game::TerminalKind::kRunning : steps.back().status;
}

DecideResult decide_step(
  const sim::TrafficState & main_state, mcts::SearchTree & tree, const mcts::SearchConfig & config)
{
  if (game::is_terminal(main_state, config.horizon) != game::TerminalKind::kRunning) {
    throw std::logic_error("decide_step: terminal state");
  }
  DecideResult out;
  const std::uint64_t before = sim::state_hash(main_state);
  out.root_visits_before = tree.root ? tree.root->visits : 0;

  const sim::TrafficState sandbox = main_state;
  mcts::SearchResult result = mcts::run_search(sandbox, tree, config);

  out.isolation_ok = sim::state_hash(main_state) == before;
  out.executed_id = result.best_id;
  out.diagnostics = std::move(result.diagnostics);
  out.warm_start = mcts::advance_root(tree, out.executed_id);
  return out;
}

EpisodeLog run_episode(
  const sim::TrafficState & initial, const Variant & variant, const EpisodeSettings & settings,
  int episode, std::uint64_t seed)
{
  mcts::SearchConfig config = settings.search;
  config.use_parallel_update = variant.parallel_update;
  config.use_action_preference = variant.action_preference;
  config.validate();

  EpisodeLog log;
  log.variant = variant.name;
  log.episode = episode;
  log.seed = seed;
  log.initial_hash = sim::state_hash(initial);
  log.n_vehicles = static_cast<int>(initial.vehicles.size());
  log.n_cav = initial.cav_count();

  sim::TrafficState state = initial;
  mcts::SearchTree tree;
  const std::vector<std::size_t> cavs = state.cav_indices();

  while (game::is_terminal(state, config.horizon) == game::TerminalKind::kRunning) {
    StepRecord rec;
    rec.t = state.time_step;
    for (const auto & v : state.vehicles) {
      rec.vehicles.push_back({v.id, v.cls, v.lane, v.pos_x, v.speed, v.active(), AgentAction{}});
    }

    std::vector<sim::CavCommand> commands(cavs.size());
    if (variant.kind == ControllerKind::kMcts) {
      DecideResult d = decide_step(state, tree, config);
      rec.executed_id = d.executed_id;
      rec.isolation_ok = d.isolation_ok;
      rec.warm_start = d.warm_start;
      rec.root_visits_before = d.root_visits_before;
      if (settings.record_diagnostics) {
        rec.diagnostics = std::move(d.diagnostics);
      }
      const std::vector<AgentAction> actions = game::decode_action(d.executed_id, log.n_cav);
      commands.assign(actions.begin(), actions.end());
    }

    const sim::StepOutcome outcome = sim::step_in_place(state, commands, config.sim);

    for (auto & vr : rec.vehicles) {
      if (const auto * r = outcome.realized_for(vr.id)) {
        vr.action = r->action;
      }
    }
    if (variant.kind == ControllerKind::kRuleBased) {
      std::vector<AgentAction> realized(cavs.size());
      for (std::size_t k = 0; k < cavs.size(); ++k) {
        if (const auto * r = outcome.realized_for(state.vehicles[cavs[k]].id)) {
          realized[k] = r->action;
        }
      }
      rec.executed_id = game::encode_action(realized);
    }
    rec.reward = game::reward_breakdown(outcome, config.weights, log.n_vehicles);
    for (const int id : outcome.arrivals) {
      const auto * v = state.find(id);
      rec.cav_arrivals += (v != nullptr && v->cls == sim::VehicleClass::kCav) ? 1 : 0;
    }
    rec.status = game::is_terminal(state, config.horizon);
    log.steps.push_back(std::move(rec));
  }
  return log;
}

void write_episode_jsonl(std::ostream & out, const EpisodeLog & log)
{
  for (const auto & rec : log.steps) {
    json j;
    j["variant"] = log.variant;
    j["episode"] = log.episode;
    j["seed"] = log.seed;
    j["initial_hash"] = log.initial_hash;
    j["n_vehicles"] = log.n_vehicles;
    j["n_cav"] = log.n_cav;
    j["t"] = rec.t;
    j["executed_id"] = rec.executed_id;
    j["status"] = std::string(game::to_string(rec.status));
    j["isolation_ok"] = rec.isolation_ok;
    j["warm_start"] = rec.warm_start;
    j["root_visits_before"] = rec.root_visits_before;
    j["cav_arrivals"] = rec.cav_arrivals;
    const auto & r = rec.reward;
    j["reward"] = {{"speed", r.speed},       {"arrival", r.arrival},     {"collision", r.collision},
                   {"lane_keep", r.lane_keep}, {"total", r.total},         {"n_speed", r.n_speed},
                   {"n_arrived", r.n_arrived}, {"n_collision", r.n_collision},
                   {"n_lane_keep", r.n_lane_keep}};
    json vehicles = json::array();
    for (const auto & v : rec.vehicles) {
      vehicles.push_back(
        {{"id", v.id},
         {"class", v.cls == sim::VehicleClass::kCav ? "CAV" : "HDV"},
         {"lane", v.lane},
         {"pos_x", v.pos_x},
         {"speed", v.speed},
         {"active", v.active},
         {"lon", to_int(v.action.lon)},
         {"lat", to_int(v.action.lat)}});
    }
    j["vehicles"] = std::move(vehicles);
    if (rec.diagnostics) {
      json snaps = json::array();
      for (const auto & s : rec.diagnostics->snapshots) {
        json q = json::array();
        for (const double x : s.q) {
          q.push_back(number_or_null(x));
        }
        snaps.push_back({{"iteration", s.iteration}, {"q", std::move(q)}, {"argmax", s.argmax}});
      }
      j["diagnostics"] = {
        {"leaf_depths", rec.diagnostics->leaf_depths},
        {"snapshots", std::move(snaps)},
        {"chosen_id", rec.diagnostics->chosen_id}};
    }
    out << j.dump() << '\n';
  }
}

std::vector<EpisodeLog> read_episode_jsonl(std::istream & in)
{
  std::vector<EpisodeLog> logs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error & e) {
      throw std::runtime_error("episode log line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string variant = j.at("variant").get<std::string>();
    const int episode = j.at("episode").get<int>();
    if (logs.empty() || logs.back().variant != variant || logs.back().episode != episode) {
      EpisodeLog log;
      log.variant = variant;
      log.episode = episode;
      log.seed = j.at("seed").get<std::uint64_t>();
      log.initial_hash = j.at("initial_hash").get<std::uint64_t>();
      log.n_vehicles = j.at("n_vehicles").get<int>();
      log.n_cav = j.at("n_cav").get<int>();
      logs.push_back(std::move(log));
    }
    StepRecord rec;
    rec.t = j.at("t").get<int>();
    rec.executed_id = j.at("executed_id").get<game::ActionId>();
    rec.status = terminal_from_string(j.at("status").get<std::string>());
    rec.isolation_ok = j.at("isolation_ok").get<bool>();
    rec.warm_start = j.at("warm_start").get<bool>();
    rec.root_visits_before = j.at("root_visits_before").get<int>();
    rec.cav_arrivals = j.at("cav_arrivals").get<int>();
    const json & r = j.at("reward");
    rec.reward.speed = r.at("speed").get<double>();
    rec.reward.arrival = r.at("arrival").get<double>();
    rec.reward.collision = r.at("collision").get<double>();
    rec.reward.lane_keep = r.at("lane_keep").get<double>();
    rec.reward.total = r.at("total").get<double>();
    rec.reward.n_speed = r.at("n_speed").get<int>();
    rec.reward.n_arrived = r.at("n_arrived").get<int>();
    rec.reward.n_collision = r.at("n_collision").get<int>();
    rec.reward.n_lane_keep = r.at("n_lane_keep").get<int>();
    for (const auto & v : j.at("vehicles")) {
      VehicleRecord vr;
      vr.id = v.at("id").get<int>();
      vr.cls = v.at("class").get<std::string>() == "CAV" ? sim::VehicleClass::kCav
                                                         : sim::VehicleClass::kHdv;
      vr.lane = v.at("lane").get<int>();
      vr.pos_x = v.at("pos_x").get<double>();
      vr.speed = v.at("speed").get<double>();
      vr.active = v.at("active").get<bool>();
      vr.action.lon = static_cast<Lon>(v.at("lon").get<int>());
      vr.action.lat = static_cast<Lat>(v.at("lat").get<int>());
      rec.vehicles.push_back(vr);
    }
    if (j.contains("diagnostics")) {
      const json & d = j.at("diagnostics");
      mcts::SearchDiagnostics diag;
      diag.leaf_depths = d.at("leaf_depths").get<std::vector<int>>();
      diag.chosen_id = d.at("chosen_id").get<game::ActionId>();
      for (const auto & s : d.at("snapshots")) {
        mcts::QSnapshot snap;
        snap.iteration = s.at("iteration").get<int>();
        snap.argmax = s.at("argmax").get<game::ActionId>();
        for (const auto & x : s.at("q")) {
          snap.q.push_back(number_or_nan(x));
        }
        diag.snapshots.push_back(std::move(snap));
      }
      rec.diagnostics = std::move(diag);
    }
    logs.back().steps.push_back(std::move(rec));
  }
  return logs;
}

}  // namespace coop::coordinator
