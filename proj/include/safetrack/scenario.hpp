#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "safetrack/simulation.hpp"
#include "safetrack/two_link.hpp"

namespace safetrack {

enum class ControllerMode { proposed, classical, both };

std::string_view to_string(ControllerMode mode);
ControllerMode parse_controller_mode(std::string_view s);

struct ReferenceConfig {
  std::string type = "sinusoid";
  Eigen::VectorXd sin_amplitude;
  Eigen::VectorXd cos_amplitude;
  Eigen::VectorXd frequency;
  Eigen::VectorXd offset;
};

/// A complete, validated simulation scenario.
///
/// Every physical quantity is explicit in the file; only `sim` has defaults.
struct Scenario {
  std::string name;

  std::string plant_model = "two_link";
  TwoLinkParams two_link;

  ConstraintSpec constraints;
  ReferenceConfig reference;

  ControllerMode mode = ControllerMode::both;
  double alpha = 0.0;
  Eigen::MatrixXd K1;
  Eigen::MatrixXd Gamma;    ///< empty when the proposed arm is absent
  Eigen::MatrixXd Gamma_d;
  Eigen::MatrixXd Gamma_2;
  Eigen::MatrixXd Gamma_c;  ///< empty when the classical arm is absent

  InitialConditions initial;
  SimConfig sim;

  bool has_proposed() const { return mode != ControllerMode::classical; }
  bool has_classical() const { return mode != ControllerMode::proposed; }
};

/// Parses and validates scenario JSON. `source` prefixes error messages.
Scenario parse_scenario(std::string_view text, std::string_view source = "<scenario>");

/// Reads and validates a scenario file. Throws IoError or ConfigError.
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical JSON text (fixed key order, 2-space indent, trailing newline).
std::string serialize_scenario(const Scenario& scenario);

/// Re-runs every validation rule; parse_scenario calls this.
void validate_scenario(const Scenario& scenario);

std::shared_ptr<const Plant> make_plant(const Scenario& scenario);
std::shared_ptr<const ReferenceTrajectory> make_reference(const Scenario& scenario);

/// Setup for one arm. The proposed gains receive kappa from the constraint levels.
RunSetup make_setup(const Scenario& scenario, ControllerKind kind);

struct ScenarioReport {
  std::string scenario;
  ControllerMode mode = ControllerMode::both;
  std::optional<RunResult> proposed;
  std::optional<RunResult> classical;
};

/// Runs every arm the scenario's mode selects; two arms run concurrently.
ScenarioReport run_scenario(const Scenario& scenario);

/// Runs both arms from identical initial conditions. Throws ConfigError unless mode is `both`.
ScenarioReport run_compare(const Scenario& scenario);

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConstraintViolation = 2,
  kExitBarrierBreach = 3,
  kExitNumericFailure = 4,
  kExitConfigError = 5,
};

int exit_code_for(const RunOutcome& outcome);

/// Exit code of a report: decided by the proposed arm when present, otherwise by the classical one.
int exit_code_for(const ScenarioReport& report);

}  // namespace safetrack
