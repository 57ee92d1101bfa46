// Command-line runner for constrained tracking scenarios.
//
//   safetrack_cli run <scenario.json> [--out dir] [--dt s] [--t-end s]
//                     [--controller proposed|classical|both] [--figures]
//   safetrack_cli compare <scenario.json> [same flags]
//
// Exit codes: 0 ok, 2 constraint violation, 3 barrier breach, 4 numeric failure,
// 5 configuration or I/O error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "safetrack/errors.hpp"
#include "safetrack/report.hpp"
#include "safetrack/scenario.hpp"

namespace fs = std::filesystem;
using namespace safetrack;

namespace {

struct Options {
  std::string scenario_path;
  std::string out_dir = "out";
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<std::string> controller;
  bool figures = false;
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("scenario", opt.scenario_path, "Scenario JSON file")->required();
  cmd->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--dt", opt.dt, "Override the integration step [s]");
  cmd->add_option("--t-end", opt.t_end, "Override the horizon [s]");
  cmd->add_option("--controller", opt.controller, "proposed, classical or both")
      ->check(CLI::IsMember({"proposed", "classical", "both"}));
  cmd->add_flag("--figures", opt.figures, "Also write per-figure CSV slices");
}

Scenario prepare(const Options& opt) {
  Scenario s = load_scenario(opt.scenario_path);
  if (opt.dt) s.sim.dt = *opt.dt;
  if (opt.t_end) s.sim.t_end = *opt.t_end;
  if (opt.controller) s.mode = parse_controller_mode(*opt.controller);
  validate_scenario(s);
  return s;
}

void write_arm(const RunResult& r, const Scenario& s, const fs::path& dir, bool figures) {
  const std::string arm(to_string(r.kind));
  emit_csv(r.log, dir / (arm + ".csv"));
  emit_summary(r, s.name, dir / (arm + "_summary.json"));
  if (figures) emit_figures(r, s.constraints, dir, arm);
}

int execute(const Options& opt, bool compare) {
  const Scenario s = prepare(opt);
  const fs::path dir(opt.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  const ScenarioReport report = compare ? run_compare(s) : run_scenario(s);
  if (report.proposed) write_arm(*report.proposed, s, dir, opt.figures);
  if (report.classical) write_arm(*report.classical, s, dir, opt.figures);

  const fs::path cmp = dir / "comparison.json";
  std::ofstream out(cmp, std::ios::binary | std::ios::trunc);
  out << comparison_json(report).dump(2) << '\n';
  if (!out) throw IoError("write to '" + cmp.string() + "' failed");

  std::cout << comparison_text(report);
  for (const auto* r : {report.proposed ? &*report.proposed : nullptr,
                        report.classical ? &*report.classical : nullptr}) {
    if (r == nullptr) continue;
    for (const auto& w : r->feasibility.warnings) std::cerr << "warning: " << w << '\n';
    if (!r->outcome.message.empty()) {
      std::cerr << to_string(r->kind) << ": " << r->outcome.message << '\n';
    }
  }
  return exit_code_for(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive tracking under state and input constraints"};
  app.require_subcommand(1);
  Options opt;
  auto* run_cmd = app.add_subcommand("run", "Run the arms selected by the scenario");
  add_common(run_cmd, opt);
  auto* cmp_cmd = app.add_subcommand("compare", "Run both arms from identical initial conditions");
  add_common(cmp_cmd, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfigError;
  }

  try {
    return execute(opt, cmp_cmd->parsed());
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumericFailure;
  }
  return kExitConfigError;
}
