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


#include "coop/harness.hpp"

#include "coop/game.hpp"
#include "coop/rng.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace coop::harness
{

namespace
{

void require(bool ok, const std::string & what)
{
  if (!ok) {
    throw std::invalid_argument("scenario: " + what);
  }
}

double mean_of(std::span<const double> xs)
{
  if (xs.empty()) {
    return 0.0;
  }
  double s = 0.0;
  for (const double x : xs) {
    s += x;
  }
  return s / static_cast<double>(xs.size());
}

std::ofstream open_for_write(const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  }
  return out;
}

void check_written(const std::ofstream & out, const std::filesystem::path & path)
{
  if (!out) {
    throw std::runtime_error("write failed for '" + path.string() + "'");
  }
}

}  // namespace

void ScenarioSpec::validate() const
{
  road.validate();
  require(n_hdv >= 0, "n_hdv must be >= 0");
  require(n_cav >= 0, "n_cav must be >= 0");
  require(departure_speed >= 0.0, "departure_speed must be >= 0");
  require(vehicle_length > 0.0, "vehicle_length must be > 0");
  require(spawn_min >= vehicle_length, "spawn_min must leave room for the vehicle body");
  require(spawn_max >= spawn_min && spawn_max <= road.length, "spawn region must lie on the road");
  require(cav_target_x > 0.0 && cav_target_x <= road.length, "cav_target_x must lie on the road");
  require(
    cav_target_lane >= 0 && cav_target_lane < road.lane_count, "cav_target_lane must be a valid lane");
  require(max_attempts >= 1, "max_attempts must be >= 1");
  if (placement) {
    const auto n = static_cast<std::size_t>(n_hdv + n_cav);
    require(placement->pos_x.size() == n, "placement needs one position per vehicle");
    require(placement->lanes.size() == n, "placement needs one lane per vehicle");
    for (const int lane : placement->lanes) {
      require(lane >= 0 && lane < road.lane_count, "placement lane out of range");
    }
  }
}

ScenarioSpec fixed_case()
{
  ScenarioSpec spec;
  spec.placement = PlacementOverride{{14.10, 13.42, 24.32, 34.15, 23.52, 15.47}, {2, 1, 0, 2, 1, 0}};
  return spec;
}

sim::TrafficState generate_scenario(const ScenarioSpec & spec)
{
  spec.validate();
  const int n = spec.n_hdv + spec.n_cav;

  std::vector<double> pos;
  std::vector<int> lanes;
  if (spec.placement) {
    pos = spec.placement->pos_x;
    lanes = spec.placement->lanes;
  } else {
    SplitMix64 rng(derive_seed(spec.seed, 0));
    const double min_dx = 2.0 * spec.vehicle_length;
    int attempts = 0;
    while (static_cast<int>(pos.size()) < n) {
      if (++attempts > spec.max_attempts) {
        throw std::runtime_error(
          "scenario: rejection budget of " + std::to_string(spec.max_attempts) +
          " exhausted while placing vehicles");
      }
      const double x = rng.uniform(spec.spawn_min, spec.spawn_max);
      const int lane = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.road.lane_count)));
      bool fits = true;
      for (std::size_t j = 0; j < pos.size(); ++j) {
        if (lanes[j] == lane && std::abs(pos[j] - x) < min_dx) {
          fits = false;
          break;
        }
      }
      if (fits) {
        pos.push_back(x);
        lanes.push_back(lane);
      }
    }
  }

  sim::TrafficState state;
  state.road = spec.road;
  state.noise_seed = derive_seed(spec.seed, 1);
  for (int i = 0; i < n; ++i) {
    sim::VehicleState v;
    v.id = i + 1;
    v.cls = i < spec.n_hdv ? sim::VehicleClass::kHdv : sim::VehicleClass::kCav;
    v.lane = lanes[static_cast<std::size_t>(i)];
    v.pos_x = pos[static_cast<std::size_t>(i)];
    v.speed = spec.departure_speed;
    v.length = spec.vehicle_length;
    if (v.cls == sim::VehicleClass::kCav) {
      if ((i - spec.n_hdv) % 2 == 0) {
        v.intention = sim::Intention{spec.cav_target_x, std::nullopt};
      } else {
        v.intention = sim::Intention{spec.road.length, spec.cav_target_lane};
      }
    }
    state.vehicles.push_back(v);
  }
  return state;
}

std::uint64_t episode_seed(std::uint64_t master_seed, int episode)
{
  return derive_seed(master_seed, static_cast<std::uint64_t>(episode));
}

double MetricsReport::mean_velo() const
{
  return mean_of(velo);
}

double MetricsReport::mean_depth_at(std::size_t step) const
{
  return step < mean_depth_by_step.size() ? mean_depth_by_step[step] : 0.0;
}

MetricsReport compute_metrics(std::span<const coordinator::EpisodeLog> logs, double gamma)
{
  if (logs.empty()) {
    throw std::invalid_argument("compute_metrics: no episode logs");
  }
  MetricsReport report;
  report.variant = logs.front().variant;
  report.n_sim = static_cast<int>(logs.size());
  const int n_cav = logs.front().n_cav;

  std::vector<std::vector<double>> velo_samples(static_cast<std::size_t>(n_cav));
  std::vector<std::vector<double>> depth_samples;
  double ats_sum = 0.0;
  double arri_sum = 0.0;

  for (const auto & log : logs) {
    double reward_sum = 0.0;
    double discounted = 0.0;
    double discount = 1.0;
    int arrivals = 0;
    int collided = 0;
    std::vector<double> speed_sum(static_cast<std::size_t>(n_cav), 0.0);
    std::vector<int> speed_count(static_cast<std::size_t>(n_cav), 0);

    for (std::size_t t = 0; t < log.steps.size(); ++t) {
      const auto & rec = log.steps[t];
      reward_sum += rec.reward.total;
      discounted += discount * rec.reward.total;
      discount *= gamma;
      arrivals += rec.cav_arrivals;
      collided += rec.reward.n_collision;
      report.isolation_ok = report.isolation_ok && rec.isolation_ok;

      int k = 0;
      for (const auto & v : rec.vehicles) {
        if (v.cls != sim::VehicleClass::kCav) {
          continue;
        }
        if (v.active && k < n_cav) {
          speed_sum[static_cast<std::size_t>(k)] += v.speed;
          ++speed_count[static_cast<std::size_t>(k)];
        }
        ++k;
      }

      if (depth_samples.size() <= t) {
        depth_samples.resize(t + 1);
      }
      double depth_mean = 0.0;
      if (rec.diagnostics && !rec.diagnostics->leaf_depths.empty()) {
        double s = 0.0;
        for (const int d : rec.diagnostics->leaf_depths) {
          s += d;
        }
        depth_mean = s / static_cast<double>(rec.diagnostics->leaf_depths.size());
      }
      depth_samples[t].push_back(depth_mean);
    }

    if (!log.steps.empty()) {
      ats_sum += reward_sum / static_cast<double>(log.steps.size());
    }
    arri_sum += n_cav > 0 ? static_cast<double>(arrivals) / n_cav : 0.0;
    report.total_collisions += collided;
    report.episode_returns.push_back(discounted);
    for (std::size_t k = 0; k < speed_sum.size(); ++k) {
      if (speed_count[k] > 0) {
        velo_samples[k].push_back(speed_sum[k] / speed_count[k]);
      }
    }
  }

  const auto runs = static_cast<double>(logs.size());
  report.ats = ats_sum / runs;
  report.coll = report.total_collisions / runs;
  report.arri_pct = arri_sum / runs;
  for (const auto & samples : velo_samples) {
    report.velo.push_back(mean_of(samples));
  }
  for (const auto & samples : depth_samples) {
    report.mean_depth_by_step.push_back(mean_of(samples));
  }
  report.discounted_group_return = mean_of(report.episode_returns);
  return report;
}

BatchResult run_batch(const BatchConfig & config)
{
  if (config.n_sim < 1) {
    throw std::invalid_argument("run_batch: n_sim must be >= 1");
  }
  if (config.variants.empty()) {
    throw std::invalid_argument("run_batch: no variants");
  }

  std::vector<sim::TrafficState> scenarios;
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < config.n_sim; ++k) {
    ScenarioSpec spec = config.scenario;
    spec.seed = episode_seed(config.master_seed, k);
    seeds.push_back(spec.seed);
    scenarios.push_back(generate_scenario(spec));
  }

  const std::size_t n_variants = config.variants.size();
  const auto n_episodes = static_cast<std::size_t>(config.n_sim);
  BatchResult result;
  result.logs.assign(n_variants, std::vector<coordinator::EpisodeLog>(n_episodes));

  const std::size_t n_tasks = n_variants * n_episodes;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t task = next++; task < n_tasks; task = next++) {
      const std::size_t v = task / n_episodes;
      const std::size_t k = task % n_episodes;
      try {
        coordinator::EpisodeLog log = coordinator::run_episode(
          scenarios[k], config.variants[v], config.settings, static_cast<int>(k), seeds[k]);
        if (!config.keep_snapshots) {
          for (auto & rec : log.steps) {
            if (rec.diagnostics) {
              rec.diagnostics->snapshots.clear();
            }
          }
        }
        result.logs[v][k] = std::move(log);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next = n_tasks;
      }
    }
  };

  unsigned n_threads = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
  n_threads = std::max(1U, std::min<unsigned>(n_threads, static_cast<unsigned>(n_tasks)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) {
      pool.emplace_back(worker);
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }

  for (std::size_t v = 0; v < n_variants; ++v) {
    result.reports.push_back(compute_metrics(result.logs[v], config.settings.search.gamma));
  }
  return result;
}

std::vector<SweepRow> sweep(const BatchConfig & base, const SweepGrid & grid)
{
  const auto & search = base.settings.search;
  const std::vector<double> c_puct = grid.c_puct.empty() ? std::vector{search.c_puct} : grid.c_puct;
  const std::vector<int> n_rollout =
    grid.n_rollout.empty() ? std::vector{search.n_rollout} : grid.n_rollout;
  const std::vector<double> w2 = grid.w2.empty() ? std::vector{search.weights.w2} : grid.w2;
  const std::vector<double> w3 = grid.w3.empty() ? std::vector{search.weights.w3} : grid.w3;

  std::vector<SweepRow> rows;
  for (const double c : c_puct) {
    for (const int n : n_rollout) {
      for (const double a : w2) {
        for (const double b : w3) {
          BatchConfig cell = base;
          cell.settings.search.c_puct = c;
          cell.settings.search.n_rollout = n;
          cell.settings.search.weights.w2 = a;
          cell.settings.search.weights.w3 = b;
          cell.settings.search.validate();
          BatchResult batch = run_batch(cell);
          for (auto & report : batch.reports) {
            rows.push_back({c, n, a, b, std::move(report)});
          }
        }
      }
    }
  }
  return rows;
}

std::string format_number(double v)
{
  if (std::isnan(v)) {
    return "nan";
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void write_metrics_csv(std::ostream & out, std::span<const MetricsReport> reports)
{
  out << "variant,n_sim,ats,coll,arri_pct,velo_1,velo_2,mean_depth_step0,mean_depth_step1\n";
  for (const auto & r : reports) {
    const double v1 = !r.velo.empty() ? r.velo[0] : 0.0;
    const double v2 = r.velo.size() > 1 ? r.velo[1] : 0.0;
    out << r.variant << ',' << r.n_sim << ',' << format_number(r.ats) << ','
        << format_number(r.coll) << ',' << format_number(r.arri_pct) << ',' << format_number(v1)
        << ',' << format_number(v2) << ',' << format_number(r.mean_depth_at(0)) << ','
        << format_number(r.mean_depth_at(1)) << '\n';
  }
}

void write_scenarios_csv(std::ostream & out, const BatchResult & result)
{
  out << "variant,episode,seed,initial_hash\n";
  for (const auto & logs : result.logs) {
    for (const auto & log : logs) {
      out << log.variant << ',' << log.episode << ',' << log.seed << ',' << log.initial_hash << '\n';
    }
  }
}

void write_sweep_csv(std::ostream & out, std::span<const SweepRow> rows)
{
  out << "c_puct,n_rollout,w2,w3,variant,ats,coll,arri_pct\n";
  for (const auto & row : rows) {
    out << format_number(row.c_puct) << ',' << row.n_rollout << ',' << format_number(row.w2) << ','
        << format_number(row.w3) << ',' << row.report.variant << ','
        << format_number(row.report.ats) << ',' << format_number(row.report.coll) << ','
        << format_number(row.report.arri_pct) << '\n';
  }
}

void write_trajectory_csv(std::ostream & out, const coordinator::EpisodeLog & log)
{
  out << "t,vehicle_id,class,lane,pos_x,speed,action_lon,action_lat\n";
  for (const auto & rec : log.steps) {
    for (const auto & v : rec.vehicles) {
      out << rec.t << ',' << v.id << ',' << (v.cls == sim::VehicleClass::kCav ? "CAV" : "HDV")
          << ',' << v.lane << ',' << format_number(v.pos_x) << ',' << format_number(v.speed) << ','
          << to_int(v.action.lon) << ',' << to_int(v.action.lat) << '\n';
    }
  }
}

void write_snapshots_csv(std::ostream & out, const coordinator::EpisodeLog & log)
{
  const game::ActionId n_ids = game::joint_action_count(log.n_cav);
  out << "decision_step,iteration";
  for (game::ActionId id = 0; id < n_ids; ++id) {
    out << ",q_" << id;
  }
  out << ",argmax_id\n";
  for (const auto & rec : log.steps) {
    if (!rec.diagnostics) {
      continue;
    }
    for (const auto & snap : rec.diagnostics->snapshots) {
      out << rec.t << ',' << snap.iteration;
      for (const double q : snap.q) {
        out << ',' << format_number(q);
      }
      out << ',' << snap.argmax << '\n';
    }
  }
}

void write_depths_csv(std::ostream & out, const coordinator::EpisodeLog & log)
{
  out << "decision_step,iteration,depth\n";
  for (const auto & rec : log.steps) {
    if (!rec.diagnostics) {
      continue;
    }
    const auto & depths = rec.diagnostics->leaf_depths;
    for (std::size_t i = 0; i < depths.size(); ++i) {
      out << rec.t << ',' << i + 1 << ',' << depths[i] << '\n';
    }
  }
}

std::vector<std::filesystem::path> export_figure_data(
  const std::filesystem::path & dir, const coordinator::EpisodeLog & log)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
  }
  std::vector<std::filesystem::path> written;
  auto emit = [&](const char * name, auto && writer) {
    const auto path = dir / name;
    std::ofstream out = open_for_write(path);
    writer(out, log);
    out.flush();
    check_written(out, path);
    written.push_back(path);
  };
  emit("trajectory.csv", write_trajectory_csv);
  emit("q_snapshots.csv", write_snapshots_csv);
  emit("depths.csv", write_depths_csv);
  emit("episode.jsonl", coordinator::write_episode_jsonl);
  return written;
}

}  // namespace coop::harness
