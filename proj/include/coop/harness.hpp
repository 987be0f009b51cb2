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


#ifndef COOP__HARNESS_HPP_
#define COOP__HARNESS_HPP_

#include "coop/coordinator.hpp"
#include "coop/traffic_sim.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coop::harness
{

/// Fixed initial placement that bypasses random spawning.
struct PlacementOverride
{
  std::vector<double> pos_x;  // HDVs first, then CAVs
  std::vector<int> lanes;
};

struct ScenarioSpec
{
  int n_hdv{4};
  int n_cav{2};
  double departure_speed{10.0};
  std::uint64_t seed{42};
  sim::RoadSpec road;
  double vehicle_length{5.0};
  double spawn_min{5.0};
  double spawn_max{150.0};
  double cav_target_x{150.0};
  int cav_target_lane{0};
  int max_attempts{100000};
  std::optional<PlacementOverride> placement;

  void validate() const;
};

/// The published two-CAV case with four HDVs.
ScenarioSpec fixed_case();

/// Vehicles 1..n_hdv are HDVs, the rest are CAVs. Even-indexed CAVs
/// aim at cav_target_x in any lane; odd-indexed CAVs must reach
/// cav_target_lane by the end of the road.
sim::TrafficState generate_scenario(const ScenarioSpec & spec);

std::uint64_t episode_seed(std::uint64_t master_seed, int episode);

struct MetricsReport
{
  std::string variant;
  int n_sim{0};
  double ats{0.0};
  double coll{0.0};
  double arri_pct{0.0};
  std::vector<double> velo;                // per CAV
  std::vector<double> mean_depth_by_step;  // mean leaf depth per decision step
  double discounted_group_return{0.0};     // mean over episodes
  std::vector<double> episode_returns;
  int total_collisions{0};
  bool isolation_ok{true};

  double mean_velo() const;
  double mean_depth_at(std::size_t step) const;
};

/// Pre: logs nonempty.
MetricsReport compute_metrics(std::span<const coordinator::EpisodeLog> logs, double gamma = 0.99);

struct BatchConfig
{
  std::vector<coordinator::Variant> variants;
  int n_sim{50};
  std::uint64_t master_seed{42};
  ScenarioSpec scenario;
  coordinator::EpisodeSettings settings;
  bool keep_snapshots{false};
  unsigned threads{0};  // 0 = hardware concurrency
};

struct BatchResult
{
  std::vector<MetricsReport> reports;                      // one per variant
  std::vector<std::vector<coordinator::EpisodeLog>> logs;  // [variant][episode]
};

BatchResult run_batch(const BatchConfig & config);

struct SweepGrid
{
  std::vector<double> c_puct;
  std::vector<int> n_rollout;
  std::vector<double> w2;
  std::vector<double> w3;
};

struct SweepRow
{
  double c_puct{0.0};
  int n_rollout{0};
  double w2{0.0};
  double w3{0.0};
  MetricsReport report;
};

/// Empty axes fall back to the base configuration value.
std::vector<SweepRow> sweep(const BatchConfig & base, const SweepGrid & grid);

/// Six significant digits; NaN prints as "nan".
std::string format_number(double v);

void write_metrics_csv(std::ostream & out, std::span<const MetricsReport> reports);
void write_scenarios_csv(std::ostream & out, const BatchResult & result);
void write_sweep_csv(std::ostream & out, std::span<const SweepRow> rows);
void write_trajectory_csv(std::ostream & out, const coordinator::EpisodeLog & log);
void write_snapshots_csv(std::ostream & out, const coordinator::EpisodeLog & log);
void write_depths_csv(std::ostream & out, const coordinator::EpisodeLog & log);

/// Writes trajectory.csv, q_snapshots.csv, depths.csv and episode.jsonl
/// into `dir`, returning the paths written.
std::vector<std::filesystem::path> export_figure_data(
  const std::filesystem::path & dir, const coordinator::EpisodeLog & log);

}  // namespace coop::harness

#endif  // COOP__HARNESS_HPP_
