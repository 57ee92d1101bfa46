#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "safetrack/scenario.hpp"
#include "safetrack/simulation.hpp"

namespace safetrack {

/// Trajectory CSV header:
///   t, q1..qn, qd1..qdn, qdot1..qdotn, e_norm, edot_norm, r_norm, tau1..taun,
///   tau_norm, dtau_norm, V, Vdot_analytic, margin_q, margin_qdot, margin_tau,
///   theta_hat1..theta_hatm
std::vector<std::string> csv_columns(Eigen::Index n, Eigen::Index m);

/// Numbers are printed with 17 significant digits.
void write_csv(const TrajectoryLog& log, std::ostream& out);
void emit_csv(const TrajectoryLog& log, const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws InvalidInput if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

/// RunOutcome plus FeasibilityReport as a machine-readable record.
nlohmann::ordered_json summary_json(const RunResult& result, std::string_view scenario);
void emit_summary(const RunResult& result, std::string_view scenario, const std::filesystem::path& path);

/// Side-by-side record of whichever arms ran. Absent arms have no key.
nlohmann::ordered_json comparison_json(const ScenarioReport& report);

/// Human-readable table of the comparison.
std::string comparison_text(const ScenarioReport& report);

/// Per-figure CSV slices (filtered error, tracking error, position, velocity,
/// input) named `<prefix>_fig<k>_<what>.csv` in `dir`.
void emit_figures(const RunResult& result, const ConstraintSpec& spec,
                  const std::filesystem::path& dir, std::string_view prefix);

}  // namespace safetrack
