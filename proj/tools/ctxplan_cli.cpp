// Copyright 2026 The ctxplan Authors
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

// ctxplan: run scenarios, dump diagnostics, rasterize risk fields.
//
// Exit codes: 0 success, 1 scenario or usage error, 2 internal failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctxplan/scenario_io.hpp"
#include "ctxplan/sim_harness.hpp"

namespace fs = std::filesystem;
using namespace ctxplan;
using namespace ctxplan::sim;

namespace {

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kInternalError = 2;

struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<Scenario> ResolveScenarios(const std::string& spec) {
  constexpr std::string_view kPrefix = "builtin:";
  if (spec.rfind(kPrefix, 0) == 0) return BuiltinFamily(spec.substr(kPrefix.size()));
  if (!fs::exists(spec)) throw ScenarioError("scenario file not found: " + spec);
  return LoadScenarios(spec);
}

ActuationMode ParseMode(const std::string& mode) {
  if (mode == "perfect") return ActuationMode::kPerfect;
  if (mode == "controller") return ActuationMode::kController;
  throw UserError("unknown mode: " + mode);
}

fs::path PrepareDirectory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw UserError("cannot create output directory: " + dir.string());
  }
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw UserError("output directory not writable: " + dir.string());
  }
  fs::remove(probe, ec);
  return dir;
}

std::ofstream OpenOrThrow(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void RequireNonEmpty(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path) || fs::file_size(path, ec) == 0) {
    throw std::runtime_error("output file missing or empty: " + path.string());
  }
}

struct RunOptions {
  std::string scenario;
  std::string out = "out";
  std::string mode = "perfect";
  int parallel = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::optional<std::uint64_t> seed;
  bool trace_rules = false;
  bool raster = false;
  int raster_cycle = 0;
  int raster_step = 0;
  bool solver_log = false;
  bool dump_graph = false;
};

int Run(const RunOptions& opt) {
  if (opt.parallel < 1) throw UserError("--parallel must be >= 1");
  SimParams params;
  params.mode = ParseMode(opt.mode);
  if (opt.raster && (opt.raster_step < 0 || opt.raster_step > params.planner.horizon)) {
    throw UserError("--raster-step must lie in [0, horizon]");
  }
  std::vector<Scenario> scenarios = ResolveScenarios(opt.scenario);
  for (auto& s : scenarios) {
    if (opt.seed) s.seed = *opt.seed;
    s.Validate();
  }
  const fs::path out = PrepareDirectory(opt.out);
  PrepareDirectory(out / "traces");
  if (opt.trace_rules) PrepareDirectory(out / "rules");
  if (opt.raster) PrepareDirectory(out / "raster");
  if (opt.solver_log) PrepareDirectory(out / "solver");
  if (opt.dump_graph) PrepareDirectory(out / "graphs");

  std::vector<SimResult> results(scenarios.size());
  ParallelFor(scenarios.size(), opt.parallel, [&](std::size_t i) {
    const Scenario& sc = scenarios[i];
    std::optional<std::ofstream> rules, raster, solver, graph;
    Diagnostics diag;
    auto open = [&](std::optional<std::ofstream>& f, const char* sub, const char* ext) {
      f.emplace(out / sub / (sc.id + ext));
      return &*f;
    };
    if (opt.trace_rules) diag.rule_trace = open(rules, "rules", ".txt");
    if (opt.raster) {
      diag.raster = open(raster, "raster", ".csv");
      diag.raster_cycle = opt.raster_cycle;
      diag.raster_step = opt.raster_step;
    }
    if (opt.solver_log) diag.solver_log = open(solver, "solver", ".csv");
    if (opt.dump_graph) diag.graph_dump = open(graph, "graphs", ".txt");
    results[i] = RunScenarioNoThrow(sc, params, diag);
    std::ofstream trace(out / "traces" / (sc.id + ".csv"));
    WriteTrace(trace, results[i]);
  });

  {
    auto f = OpenOrThrow(out / "results.csv");
    WriteResults(f, results);
  }
  {
    auto f = OpenOrThrow(out / "aggregate.csv");
    WriteAggregate(f, results);
  }
  {
    nlohmann::json cfg;
    cfg["scenario"] = opt.scenario;
    cfg["mode"] = opt.mode;
    cfg["runs"] = scenarios.size();
    cfg["seeds"] = nlohmann::json::array();
    for (const auto& s : scenarios) cfg["seeds"].push_back(s.seed);
    auto f = OpenOrThrow(out / "run_config.json");
    f << cfg.dump(2) << '\n';
  }

  int errors = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    RequireNonEmpty(out / "traces" / (scenarios[i].id + ".csv"));
    if (!results[i].error.empty()) {
      std::cerr << scenarios[i].id << ": " << results[i].error << '\n';
      ++errors;
    }
  }
  RequireNonEmpty(out / "results.csv");
  RequireNonEmpty(out / "aggregate.csv");

  int collisions = 0, goals = 0;
  for (const auto& r : results) {
    collisions += r.collisions;
    goals += r.goal_reached;
  }
  std::cout << results.size() << " runs, " << goals << " goals reached, " << collisions
            << " collisions, " << errors << " errors; output in " << out.string() << '\n';
  return errors ? kInternalError : kOk;
}

struct RasterOptions {
  std::string scenario;
  std::string out;
  int step = 0;
  int cycle = 0;
  double resolution = 0.5;
};

int Raster(const RasterOptions& opt) {
  SimParams params;
  params.keep_trace = false;
  if (opt.step < 0 || opt.step > params.planner.horizon) {
    throw UserError("--step must lie in [0, horizon]");
  }
  if (opt.cycle < 0) throw UserError("--cycle must be >= 0");
  if (!(opt.resolution > 0)) throw UserError("--resolution must be positive");
  std::vector<Scenario> scenarios = ResolveScenarios(opt.scenario);
  if (scenarios.empty()) throw ScenarioError("no scenario to rasterize");
  Scenario sc = scenarios.front();
  // Stop right after the requested planning cycle.
  sc.duration_cap = std::min(
      sc.duration_cap, (opt.cycle + 1) * params.replan_every * params.plant_dt);

  const fs::path path(opt.out);
  if (path.has_parent_path()) PrepareDirectory(path.parent_path());
  std::ofstream f(path);
  if (!f) throw UserError("cannot write " + opt.out);
  Diagnostics diag;
  diag.raster = &f;
  diag.raster_cycle = opt.cycle;
  diag.raster_step = opt.step;
  diag.raster_grid.resolution = opt.resolution;
  const SimResult r = RunScenario(sc, params, diag);
  f.close();
  std::error_code ec;
  if (fs::file_size(path, ec) == 0 || ec) {
    throw UserError("planning cycle " + std::to_string(opt.cycle) + " was never reached in " +
                    r.scenario_id);
  }
  std::cout << "raster of " << sc.id << " step " << opt.step << " written to " << opt.out
            << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware NMPC trajectory planner: scenario runs and diagnostics"};
  app.require_subcommand(1);

  RunOptions run;
  CLI::App* run_cmd = app.add_subcommand("run", "Simulate one scenario file or built-in family");
  run_cmd->add_option("--scenario", run.scenario,
                      "Scenario JSON file or builtin:a|b|c|d|all|empty")
      ->required();
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--mode", run.mode, "Actuation: perfect or controller")
      ->capture_default_str();
  run_cmd->add_option("--parallel", run.parallel, "Number of worker threads")
      ->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Seed recorded for every scenario");
  run_cmd->add_flag("--trace-rules", run.trace_rules, "Write rule firings per planning cycle");
  run_cmd->add_flag("--raster", run.raster, "Write one risk-field raster per scenario");
  run_cmd->add_option("--raster-cycle", run.raster_cycle, "Planning cycle for --raster")
      ->capture_default_str();
  run_cmd->add_option("--raster-step", run.raster_step, "Horizon step for --raster")
      ->capture_default_str();
  run_cmd->add_flag("--solver-log", run.solver_log, "Write per-cycle solver statistics");
  run_cmd->add_flag("--dump-graph", run.dump_graph, "Write the scene graph of every cycle");

  RasterOptions raster;
  CLI::App* raster_cmd =
      app.add_subcommand("raster", "Rasterize the risk field of the first scenario");
  raster_cmd->add_option("--scenario", raster.scenario,
                         "Scenario JSON file or builtin:a|b|c|d|all|empty")
      ->required();
  raster_cmd->add_option("--out", raster.out, "Output CSV file")->required();
  raster_cmd->add_option("--step", raster.step, "Horizon step k of the field")
      ->capture_default_str();
  raster_cmd->add_option("--cycle", raster.cycle, "Planning cycle to sample")
      ->capture_default_str();
  raster_cmd->add_option("--resolution", raster.resolution, "Grid spacing in meters")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
    return kUserError;
  }

  try {
    if (run_cmd->parsed()) return Run(run);
    return Raster(raster);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}
