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


#ifndef COOP__CONFIG_HPP_
#define COOP__CONFIG_HPP_

#include "coop/harness.hpp"
#include "coop/mcts.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coop::config
{

/// Raised for unknown keys, malformed values and out-of-range values.
/// The message always names the offending key.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct RunConfig
{
  // simulation
  double dt{0.1};
  double road_length{300.0};
  int lane_count{3};
  double b{9.0};
  double tau_k{1.1};
  double eps{0.5};
  double hdv_a_max{2.6};
  double hdv_v_max{30.0};
  double cav_accel{3.5};
  double cav_decel{3.5};
  double cav_v_max{30.0};
  double lc_hysteresis{1.0};
  // scenario
  int n_hdv{4};
  int n_cav{2};
  double departure_speed{10.0};
  // reward
  double w1{1.0};
  double w2{30.0};
  double w3{-50.0};
  double w4{2.0};
  double r_speed{10.0};
  double v_thres{28.0};
  // search
  double gamma{0.99};
  double gamma_p{0.01};
  double c_puct{21.0};
  int n_rollout{200};
  int horizon{90};
  int max_descent_depth{90};
  int snapshot_count{16};
  bool common_random_numbers{true};
  std::string backup{"path_return"};
  std::string exclusion{"exclude_decel"};
  std::string preference_scale{"per_vehicle"};
  // runs
  std::string variant{"PE"};
  std::vector<std::string> variants{"RB", "SN", "SE", "PN", "PE"};
  std::uint64_t seed{42};
  int n_sim{50};
  int threads{0};
  std::string output_dir{"out"};
  // sweep axes; empty keeps the single value above
  std::vector<double> sweep_c_puct;
  std::vector<int> sweep_n_rollout;
  std::vector<double> sweep_w2;
  std::vector<double> sweep_w3;

  bool operator==(const RunConfig &) const = default;
};

/// All recognized keys in echo order.
const std::vector<std::string> & config_keys();

bool is_config_key(std::string_view key);

/// Parse `value` into the field named `key`; range checks run in validate().
void set_value(RunConfig & config, std::string_view key, std::string_view value);

std::string get_value(const RunConfig & config, std::string_view key);

void validate(const RunConfig & config);

/// Apply `key = value` lines (with `#` comments) on top of `config`.
/// Returns the keys that were set.
std::vector<std::string> apply_text(RunConfig & config, std::string_view text, std::string_view origin);

/// Resolved configuration in the same `key = value` format.
std::string echo(const RunConfig & config);

/// Parse COOP_MCTS_SEED style text; nullopt if absent.
std::optional<std::uint64_t> parse_seed_env(const char * text);

mcts::SearchConfig to_search_config(const RunConfig & config);
harness::ScenarioSpec to_scenario(const RunConfig & config);
harness::BatchConfig to_batch_config(const RunConfig & config);
harness::SweepGrid to_sweep_grid(const RunConfig & config);

}  // namespace coop::config

#endif  // COOP__CONFIG_HPP_
