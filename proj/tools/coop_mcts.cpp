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
#include "coop/harness.hpp"
#include "coop/selftest.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using coop::config::RunConfig;

namespace
{

std::string kebab(std::string key)
{
  for (auto & c : key) {
    c = c == '_' ? '-' : c;
  }
  return key;
}

std::string read_file(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read config file '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename Writer>
void write_file(const fs::path & path, Writer && writer)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  }
  writer(out);
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed for '" + path.string() + "'");
  }
}

RunConfig resolve(const std::string & config_path, const std::map<std::string, std::string> & flags)
{
  RunConfig cfg;
  std::set<std::string> explicit_keys;
  if (!config_path.empty()) {
    for (auto & key : coop::config::apply_text(cfg, read_file(config_path), config_path)) {
      explicit_keys.insert(std::move(key));
    }
  }
  for (const auto & [key, value] : flags) {
    coop::config::set_value(cfg, key, value);
    explicit_keys.insert(key);
  }
  if (!explicit_keys.contains("seed")) {
    if (const auto seed = coop::config::parse_seed_env(std::getenv("COOP_MCTS_SEED"))) {
      cfg.seed = *seed;
    }
  }
  coop::config::validate(cfg);
  return cfg;
}

fs::path prepare_output(const RunConfig & cfg)
{
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  }
  write_file(dir / "config.resolved.txt", [&](std::ostream & out) { out << coop::config::echo(cfg); });
  return dir;
}

void run_single(const RunConfig & cfg, coop::harness::ScenarioSpec spec)
{
  const fs::path dir = prepare_output(cfg);
  coop::coordinator::EpisodeSettings settings;
  settings.search = coop::config::to_search_config(cfg);
  const auto initial = coop::harness::generate_scenario(spec);
  const auto log = coop::coordinator::run_episode(
    initial, coop::coordinator::variant_from_name(cfg.variant), settings, 0, spec.seed);
  coop::harness::export_figure_data(dir, log);
  const auto report = coop::harness::compute_metrics(std::span(&log, 1), cfg.gamma);
  write_file(dir / "metrics.csv", [&](std::ostream & out) {
    coop::harness::write_metrics_csv(out, std::span(&report, 1));
  });
  std::cout << cfg.variant << ": " << log.steps.size() << " steps, status "
            << coop::game::to_string(log.final_status()) << ", ats "
            << coop::harness::format_number(report.ats) << '\n';
}

void run_batch(const RunConfig & cfg)
{
  const fs::path dir = prepare_output(cfg);
  const auto result = coop::harness::run_batch(coop::config::to_batch_config(cfg));
  write_file(dir / "metrics.csv", [&](std::ostream & out) {
    coop::harness::write_metrics_csv(out, result.reports);
  });
  write_file(dir / "scenarios.csv", [&](std::ostream & out) {
    coop::harness::write_scenarios_csv(out, result);
  });
  coop::harness::write_metrics_csv(std::cout, result.reports);
}

void run_sweep(const RunConfig & cfg)
{
  const fs::path dir = prepare_output(cfg);
  const auto rows =
    coop::harness::sweep(coop::config::to_batch_config(cfg), coop::config::to_sweep_grid(cfg));
  write_file(dir / "sweep.csv", [&](std::ostream & out) { coop::harness::write_sweep_csv(out, rows); });
  coop::harness::write_sweep_csv(std::cout, rows);
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Cooperative multi-vehicle MCTS planner and experiment harness"};
  app.require_subcommand(1, 1);

  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file");
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option *> flag_options;
  for (const auto & key : coop::config::config_keys()) {
    flag_options[key] = app.add_option("--" + kebab(key), flag_values[key], "override '" + key + "'");
  }

  auto * run = app.add_subcommand("run", "run one episode of the configured variant");
  auto * batch = app.add_subcommand("batch", "run the variant matrix over paired seeds");
  auto * sweep = app.add_subcommand("sweep", "run a batch per cell of the sweep grid");
  auto * replay = app.add_subcommand("case", "replay the fixed two-CAV case");
  auto * selftest = app.add_subcommand("selftest", "run the invariant suite");
  for (auto * sub : {run, batch, sweep, replay, selftest}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    return app.exit(e);
  }

  try {
    if (selftest->parsed()) {
      return coop::run_selftest(std::cout) == 0 ? 0 : 1;
    }
    std::map<std::string, std::string> given;
    for (const auto & [key, option] : flag_options) {
      if (option->count() > 0) {
        given[key] = flag_values[key];
      }
    }
    const RunConfig cfg = resolve(config_path, given);
    if (run->parsed()) {
      run_single(cfg, coop::config::to_scenario(cfg));
    } else if (replay->parsed()) {
      coop::harness::ScenarioSpec spec = coop::config::to_scenario(cfg);
      spec.placement = coop::harness::fixed_case().placement;
      run_single(cfg, spec);
    } else if (batch->parsed()) {
      run_batch(cfg);
    } else if (sweep->parsed()) {
      run_sweep(cfg);
    }
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
