// dkff: scenario runs, feature studies, self-tests and map generation.
//
// Exit codes: 0 ok, 1 configuration or I/O error, 2 divergence.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "dkff/error.hpp"
#include "dkff/map.hpp"
#include "dkff/output.hpp"
#include "dkff/scenario.hpp"
#include "dkff/selftest.hpp"
#include "dkff/simulation.hpp"
#include "dkff/study.hpp"
#include "dkff/world.hpp"

namespace fs = std::filesystem;
using namespace dkff;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;

struct ScenarioArgs {
  std::string scenario;
  std::string out = "out";
  std::vector<std::string> overrides;
  std::string seed;
  std::string variant;
  std::string assoc;

  std::vector<std::string> all_overrides() const {
    std::vector<std::string> all;
    if (!seed.empty()) all.push_back("seed=" + seed);
    if (!variant.empty()) all.push_back("variant=" + variant);
    if (!assoc.empty()) all.push_back("association=" + assoc);
    all.insert(all.end(), overrides.begin(), overrides.end());
    return all;
  }
};

void add_scenario_options(CLI::App* cmd, ScenarioArgs& a) {
  cmd->add_option("--scenario", a.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Override the scenario seed");
  cmd->add_option("--variant", a.variant, "Filter variant")->check(CLI::IsMember({"2d", "3d"}));
  cmd->add_option("--assoc", a.assoc, "Feature association")->check(CLI::IsMember({"oracle", "nn"}));
  cmd->add_option("--override", a.overrides, "Dotted KEY=VALUE, VALUE parsed as JSON (repeatable)");
}

struct Loaded {
  Scenario scenario;
  Map map;
};

Loaded load(const ScenarioArgs& a) {
  Scenario s = load_scenario(a.scenario, a.all_overrides());
  Map map = load_map(s.map_path);
  return {std::move(s), std::move(map)};
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

int cmd_run(const ScenarioArgs& a) {
  const Loaded in = load(a);
  const fs::path out = prepare_out(a.out);
  const RunResult r = run_scenario(in.scenario, in.map);
  write_atomic(out / "run.csv", run_csv(r));
  write_atomic(out / "summary.json", run_summary_json(r, in.scenario));
  std::cout << run_summary_markdown(r);
  if (r.estimates.failed) std::cerr << "filter failure: " << r.estimates.failure << "\n";
  if (r.summary.diverged) {
    std::cerr << "run diverged (lateral error above " << kDivergenceLateral << " m)\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int study_exit(int diverged, int failed) {
  if (diverged + failed == 0) return kExitOk;
  std::cerr << diverged << " run(s) diverged, " << failed << " failed\n";
  return kExitDiverged;
}

int cmd_sweep(const ScenarioArgs& a) {
  const Loaded in = load(a);
  const auto& st = in.scenario.study;
  if (st.counts.empty()) throw Error(ErrorKind::kInvalidArgument, "/study/counts: empty list");
  if (st.noise_levels.empty()) throw Error(ErrorKind::kInvalidArgument, "/study/noise_levels: empty list");
  const fs::path out = prepare_out(a.out);
  const auto cells = sweep_point_count(in.scenario, in.map, st.counts, st.noise_levels, st.seeds);
  write_atomic(out / "sweep.csv", sweep_csv(cells));
  write_atomic(out / "sweep.json", sweep_json(cells));
  const std::string md = sweep_markdown(cells);
  write_atomic(out / "sweep.md", md);
  std::cout << md;
  int diverged = 0, failed = 0;
  for (const auto& c : cells) {
    diverged += c.stats.diverged;
    failed += c.stats.failed;
  }
  return study_exit(diverged, failed);
}

int cmd_combo(const ScenarioArgs& a) {
  const Loaded in = load(a);
  const auto& st = in.scenario.study;
  if (st.feature_sets.empty()) throw Error(ErrorKind::kInvalidArgument, "/study/feature_sets: empty list");
  const fs::path out = prepare_out(a.out);
  const auto rows = combo_study(in.scenario, in.map, st.feature_sets, st.seeds);
  write_atomic(out / "combo.csv", combo_csv(rows));
  write_atomic(out / "combo.json", combo_json(rows));
  const std::string md = combo_markdown(rows);
  write_atomic(out / "combo.md", md);
  std::cout << md;
  int diverged = 0, failed = 0;
  for (const auto& r : rows) {
    diverged += r.stats.diverged;
    failed += r.stats.failed;
  }
  return study_exit(diverged, failed);
}

int cmd_selftest(double perturbation) {
  SelftestOptions options;
  options.jacobian_perturbation = perturbation;
  bool ok = true;
  for (const auto& r : run_selftest(options)) {
    std::cout << format_check(r) << "\n";
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitConfig;
}

int cmd_make_map(const std::string& dir) {
  const fs::path out = prepare_out(dir);
  write_atomic(out / "map.json", save_map(make_loop_map()));
  for (const auto& name : template_names()) {
    const nlohmann::json doc = name == "run" ? loop_scenario_json() : study_scenario_json(name);
    write_atomic(out / (name + ".json"), doc.dump(2) + "\n");
  }
  std::cout << "wrote " << (out / "map.json").string() << " and scenario templates";
  for (const auto& name : template_names()) std::cout << " " << name << ".json";
  std::cout << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Map-relative vehicle localization with a decentralized Kalman filter"};
  app.require_subcommand(1, 1);

  ScenarioArgs run_args, sweep_args, combo_args;
  auto* run = app.add_subcommand("run", "Simulate one scenario and write per-tick CSV and a summary");
  add_scenario_options(run, run_args);
  auto* sweep = app.add_subcommand("sweep", "Camera point count x pixel noise study");
  add_scenario_options(sweep, sweep_args);
  auto* combo = app.add_subcommand("combo", "Feature combination study");
  add_scenario_options(combo, combo_args);

  double perturbation = 0.0;
  auto* selftest = app.add_subcommand("selftest", "Jacobian, fusion and line geometry checks");
  selftest->add_option("--perturb-jacobian", perturbation,
                       "Add this to one entry of every analytic Jacobian (the suite must fail)");

  std::string map_dir = ".";
  auto* make_map = app.add_subcommand("make-map", "Write the loop track map and scenario templates");
  make_map->add_option("--out", map_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*sweep) return cmd_sweep(sweep_args);
    if (*combo) return cmd_combo(combo_args);
    if (*selftest) return cmd_selftest(perturbation);
    if (*make_map) return cmd_make_map(map_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
