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


#include "coop/config.hpp"

#include "coop/coordinator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <variant>

namespace coop::config
{

namespace
{

using Field = std::variant<
  double RunConfig::*, int RunConfig::*, std::uint64_t RunConfig::*, bool RunConfig::*,
  std::string RunConfig::*, std::vector<std::string> RunConfig::*, std::vector<double> RunConfig::*,
  std::vector<int> RunConfig::*>;

/// Returns nullptr when the value is acceptable.
using Check = const char * (*)(const RunConfig &);

struct Entry
{
  std::string_view key;
  Field field;
  Check check;
};

bool known_variant(std::string_view name)
{
  const auto & names = coordinator::variant_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

const std::vector<Entry> & registry()
{
  static const std::vector<Entry> entries{
    {"dt", &RunConfig::dt, [](const RunConfig & c) { return c.dt > 0.0 ? nullptr : "must be > 0"; }},
    {"road_length", &RunConfig::road_length,
     [](const RunConfig & c) { return c.road_length > 0.0 ? nullptr : "must be > 0"; }},
    {"lane_count", &RunConfig::lane_count,
     [](const RunConfig & c) { return c.lane_count >= 1 ? nullptr : "must be >= 1"; }},
    {"b", &RunConfig::b, [](const RunConfig & c) { return c.b > 0.0 ? nullptr : "must be > 0"; }},
    {"tau_k", &RunConfig::tau_k,
     [](const RunConfig & c) { return c.tau_k > 0.0 ? nullptr : "must be > 0"; }},
    {"eps", &RunConfig::eps,
     [](const RunConfig & c) { return c.eps >= 0.0 && c.eps <= 1.0 ? nullptr : "must be in [0, 1]"; }},
    {"hdv_a_max", &RunConfig::hdv_a_max,
     [](const RunConfig & c) { return c.hdv_a_max > 0.0 ? nullptr : "must be > 0"; }},
    {"hdv_v_max", &RunConfig::hdv_v_max,
     [](const RunConfig & c) { return c.hdv_v_max > 0.0 ? nullptr : "must be > 0"; }},
    {"cav_accel", &RunConfig::cav_accel,
     [](const RunConfig & c) { return c.cav_accel > 0.0 ? nullptr : "must be > 0"; }},
    {"cav_decel", &RunConfig::cav_decel,
     [](const RunConfig & c) { return c.cav_decel > 0.0 ? nullptr : "must be > 0"; }},
    {"cav_v_max", &RunConfig::cav_v_max,
     [](const RunConfig & c) { return c.cav_v_max > 0.0 ? nullptr : "must be > 0"; }},
    {"lc_hysteresis", &RunConfig::lc_hysteresis,
     [](const RunConfig & c) { return c.lc_hysteresis >= 0.0 ? nullptr : "must be >= 0"; }},
    {"n_hdv", &RunConfig::n_hdv,
     [](const RunConfig & c) { return c.n_hdv >= 0 ? nullptr : "must be >= 0"; }},
    {"n_cav", &RunConfig::n_cav,
     [](const RunConfig & c) { return c.n_cav >= 1 && c.n_cav <= 4 ? nullptr : "must be in [1, 4]"; }},
    {"departure_speed", &RunConfig::departure_speed,
     [](const RunConfig & c) {
       return c.departure_speed >= 0.0 && c.departure_speed <= std::min(c.hdv_v_max, c.cav_v_max)
                ? nullptr
                : "must be in [0, v_max]";
     }},
    {"w1", &RunConfig::w1, [](const RunConfig &) -> const char * { return nullptr; }},
    {"w2", &RunConfig::w2, [](const RunConfig &) -> const char * { return nullptr; }},
    {"w3", &RunConfig::w3, [](const RunConfig & c) { return c.w3 < 0.0 ? nullptr : "must be < 0"; }},
    {"w4", &RunConfig::w4, [](const RunConfig &) -> const char * { return nullptr; }},
    {"r_speed", &RunConfig::r_speed,
     [](const RunConfig & c) { return c.r_speed >= 0.0 ? nullptr : "must be >= 0"; }},
    {"v_thres", &RunConfig::v_thres,
     [](const RunConfig & c) { return c.v_thres >= 0.0 ? nullptr : "must be >= 0"; }},
    {"gamma", &RunConfig::gamma,
     [](const RunConfig & c) { return c.gamma > 0.0 && c.gamma <= 1.0 ? nullptr : "must be in (0, 1]"; }},
    {"gamma_p", &RunConfig::gamma_p,
     [](const RunConfig & c) {
       return c.gamma_p >= 0.0 && c.gamma_p <= 1.0 ? nullptr : "must be in [0, 1]";
     }},
    {"c_puct", &RunConfig::c_puct,
     [](const RunConfig & c) { return c.c_puct >= 0.0 ? nullptr : "must be >= 0"; }},
    {"n_rollout", &RunConfig::n_rollout,
     [](const RunConfig & c) { return c.n_rollout >= 1 ? nullptr : "must be >= 1"; }},
    {"horizon", &RunConfig::horizon,
     [](const RunConfig & c) { return c.horizon >= 1 ? nullptr : "must be >= 1"; }},
    {"max_descent_depth", &RunConfig::max_descent_depth,
     [](const RunConfig & c) { return c.max_descent_depth >= 1 ? nullptr : "must be >= 1"; }},
    {"snapshot_count", &RunConfig::snapshot_count,
     [](const RunConfig & c) { return c.snapshot_count >= 0 ? nullptr : "must be >= 0"; }},
    {"common_random_numbers", &RunConfig::common_random_numbers,
     [](const RunConfig &) -> const char * { return nullptr; }},
    {"backup", &RunConfig::backup,
     [](const RunConfig & c) {
       return c.backup == "path_return" || c.backup == "leaf_reward"
                ? nullptr
                : "must be path_return or leaf_reward";
     }},
    {"exclusion", &RunConfig::exclusion,
     [](const RunConfig & c) {
       return c.exclusion == "exclude_decel" || c.exclusion == "decel_with_keep"
                ? nullptr
                : "must be exclude_decel or decel_with_keep";
     }},
    {"preference_scale", &RunConfig::preference_scale,
     [](const RunConfig & c) {
       return c.preference_scale == "per_vehicle" || c.preference_scale == "raw"
                ? nullptr
                : "must be per_vehicle or raw";
     }},
    {"variant", &RunConfig::variant,
     [](const RunConfig & c) {
       return known_variant(c.variant) ? nullptr : "must be one of RB, SN, SE, PN, PE";
     }},
    {"variants", &RunConfig::variants,
     [](const RunConfig & c) {
       if (c.variants.empty()) {
         return "must list at least one variant";
       }
       return std::all_of(c.variants.begin(), c.variants.end(), known_variant)
                ? nullptr
                : "entries must be RB, SN, SE, PN or PE";
     }},
    {"seed", &RunConfig::seed, [](const RunConfig &) -> const char * { return nullptr; }},
    {"n_sim", &RunConfig::n_sim,
     [](const RunConfig & c) { return c.n_sim >= 1 ? nullptr : "must be >= 1"; }},
    {"threads", &RunConfig::threads,
     [](const RunConfig & c) { return c.threads >= 0 ? nullptr : "must be >= 0"; }},
    {"output_dir", &RunConfig::output_dir,
     [](const RunConfig & c) { return c.output_dir.empty() ? "must not be empty" : nullptr; }},
    {"sweep_c_puct", &RunConfig::sweep_c_puct,
     [](const RunConfig & c) {
       return std::all_of(c.sweep_c_puct.begin(), c.sweep_c_puct.end(), [](double x) { return x >= 0.0; })
                ? nullptr
                : "entries must be >= 0";
     }},
    {"sweep_n_rollout", &RunConfig::sweep_n_rollout,
     [](const RunConfig & c) {
       return std::all_of(
                c.sweep_n_rollout.begin(), c.sweep_n_rollout.end(), [](int x) { return x >= 1; })
                ? nullptr
                : "entries must be >= 1";
     }},
    {"sweep_w2", &RunConfig::sweep_w2, [](const RunConfig &) -> const char * { return nullptr; }},
    {"sweep_w3", &RunConfig::sweep_w3,
     [](const RunConfig & c) {
       return std::all_of(c.sweep_w3.begin(), c.sweep_w3.end(), [](double x) { return x < 0.0; })
                ? nullptr
                : "entries must be < 0";
     }},
  };
  return entries;
}

const Entry & lookup(std::string_view key)
{
  for (const auto & e : registry()) {
    if (e.key == key) {
      return e;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected)
{
  throw ConfigError(
    "config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "' as " +
    std::string(expected));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value, std::string_view expected)
{
  T out{};
  const char * end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) {
    bad_value(key, value, expected);
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) {
      bad_value(key, value, expected);
    }
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value)
{
  if (value == "true" || value == "1") {
    return true;
  }
  if (value == "false" || value == "0") {
    return false;
  }
  bad_value(key, value, "a boolean (true/false)");
}

std::vector<std::string_view> split_list(std::string_view value)
{
  std::vector<std::string_view> out;
  value = trim(value);
  if (value.empty()) {
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    out.push_back(trim(value.substr(start, comma - start)));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v)
{
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T> & xs)
{
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) {
      out += ',';
    }
    if constexpr (std::is_same_v<T, double>) {
      out += format_double(xs[i]);
    } else if constexpr (std::is_same_v<T, std::string>) {
      out += xs[i];
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string> & config_keys()
{
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto & e : registry()) {
      out.emplace_back(e.key);
    }
    return out;
  }();
  return keys;
}

bool is_config_key(std::string_view key)
{
  const auto & keys = config_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

void set_value(RunConfig & config, std::string_view key, std::string_view raw)
{
  const Entry & entry = lookup(key);
  const std::string_view value = trim(raw);
  std::visit(
    [&](auto member) {
      using T = std::remove_reference_t<decltype(config.*member)>;
      T & slot = config.*member;
      if constexpr (std::is_same_v<T, double>) {
        slot = parse_number<double>(key, value, "a number");
      } else if constexpr (std::is_same_v<T, int>) {
        slot = parse_number<int>(key, value, "an integer");
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        slot = parse_number<std::uint64_t>(key, value, "an unsigned integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        slot = parse_bool(key, value);
      } else if constexpr (std::is_same_v<T, std::string>) {
        slot = std::string(value);
      } else {
        using E = typename T::value_type;
        T items;
        for (const auto part : split_list(value)) {
          if constexpr (std::is_same_v<E, double>) {
            items.push_back(parse_number<double>(key, part, "a list of numbers"));
          } else if constexpr (std::is_same_v<E, int>) {
            items.push_back(parse_number<int>(key, part, "a list of integers"));
          } else {
            items.emplace_back(part);
          }
        }
        slot = std::move(items);
      }
    },
    entry.field);
}

std::string get_value(const RunConfig & config, std::string_view key)
{
  const Entry & entry = lookup(key);
  return std::visit(
    [&](auto member) -> std::string {
      using T = std::remove_cvref_t<decltype(config.*member)>;
      const T & slot = config.*member;
      if constexpr (std::is_same_v<T, double>) {
        return format_double(slot);
      } else if constexpr (std::is_same_v<T, bool>) {
        return slot ? "true" : "false";
      } else if constexpr (std::is_same_v<T, std::string>) {
        return slot;
      } else if constexpr (std::is_arithmetic_v<T>) {
        return std::to_string(slot);
      } else {
        return join(slot);
      }
    },
    entry.field);
}

void validate(const RunConfig & config)
{
  for (const auto & e : registry()) {
    if (const char * problem = e.check(config)) {
      throw ConfigError(
        "config key '" + std::string(e.key) + "' = " + get_value(config, e.key) + " is out of range: " +
        problem);
    }
  }
}

std::vector<std::string> apply_text(RunConfig & config, std::string_view text, std::string_view origin)
{
  std::vector<std::string> set_keys;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto newline = text.find('\n', start);
    std::string_view line = text.substr(start, newline - start);
    start = newline == std::string_view::npos ? text.size() + 1 : newline + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) {
      throw ConfigError(where + "expected 'key = value', got '" + std::string(line) + "'");
    }
    const std::string key(trim(line.substr(0, eq)));
    try {
      set_value(config, key, line.substr(eq + 1));
    } catch (const ConfigError & e) {
      throw ConfigError(where + e.what());
    }
    set_keys.push_back(key);
  }
  return set_keys;
}

std::string echo(const RunConfig & config)
{
  std::string out;
  for (const auto & e : registry()) {
    out += std::string(e.key) + " = " + get_value(config, e.key) + "\n";
  }
  return out;
}

std::optional<std::uint64_t> parse_seed_env(const char * text)
{
  if (text == nullptr || trim(text).empty()) {
    return std::nullopt;
  }
  return parse_number<std::uint64_t>("COOP_MCTS_SEED", trim(text), "an unsigned integer");
}

mcts::SearchConfig to_search_config(const RunConfig & c)
{
  mcts::SearchConfig s;
  s.n_rollout = c.n_rollout;
  s.c_puct = c.c_puct;
  s.gamma = c.gamma;
  s.gamma_p = c.gamma_p;
  s.max_descent_depth = c.max_descent_depth;
  s.horizon = c.horizon;
  s.snapshot_count = c.snapshot_count;
  s.common_random_numbers = c.common_random_numbers;
  s.backup = c.backup == "leaf_reward" ? mcts::ValueBackup::kLeafReward : mcts::ValueBackup::kPathReturn;
  s.exclusion = c.exclusion == "decel_with_keep" ? game::ExclusionPolicy::kDecelWithKeep
                                               : game::ExclusionPolicy::kExcludeDecel;
  s.preference_scale =
    c.preference_scale == "raw" ? game::PreferenceScale::kRaw : game::PreferenceScale::kPerVehicle;
  s.weights = {c.w1, c.w2, c.w3, c.w4, c.r_speed, c.v_thres};
  s.sim.dt = c.dt;
  s.sim.hdv = {c.b, c.tau_k, c.eps, c.hdv_a_max, c.hdv_v_max};
  s.sim.cav = {c.cav_accel, c.cav_decel, c.cav_v_max};
  s.sim.lc_hysteresis = c.lc_hysteresis;
  const auto v = coordinator::variant_from_name(c.variant);
  s.use_parallel_update = v.parallel_update;
  s.use_action_preference = v.action_preference;
  return s;
}

harness::ScenarioSpec to_scenario(const RunConfig & c)
{
  harness::ScenarioSpec spec;
  spec.n_hdv = c.n_hdv;
  spec.n_cav = c.n_cav;
  spec.departure_speed = c.departure_speed;
  spec.seed = c.seed;
  spec.road = {c.road_length, c.lane_count};
  spec.spawn_max = c.road_length / 2.0;
  spec.cav_target_x = std::min(spec.cav_target_x, c.road_length);
  return spec;
}

harness::BatchConfig to_batch_config(const RunConfig & c)
{
  harness::BatchConfig batch;
  for (const auto & name : c.variants) {
    batch.variants.push_back(coordinator::variant_from_name(name));
  }
  batch.n_sim = c.n_sim;
  batch.master_seed = c.seed;
  batch.scenario = to_scenario(c);
  batch.settings.search = to_search_config(c);
  batch.threads = static_cast<unsigned>(c.threads);
  return batch;
}

harness::SweepGrid to_sweep_grid(const RunConfig & c)
{
  return {c.sweep_c_puct, c.sweep_n_rollout, c.sweep_w2, c.sweep_w3};
}

}  // namespace coop::config
