#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "safetrack/constraints.hpp"
#include "safetrack/controllers.hpp"
#include "safetrack/plant.hpp"
#include "safetrack/reference.hpp"

namespace safetrack {

enum class IntegratorKind { rk4, euler };

struct SimConfig {
  double dt = 1e-3;
  double t_end = 30.0;
  IntegratorKind integrator = IntegratorKind::rk4;
  int record_stride = 1;

  void validate() const;
  /// Number of integration steps, round(t_end / dt).
  long steps() const;
};

enum class ControllerKind { proposed, classical };

std::string_view to_string(ControllerKind kind);
std::string_view to_string(IntegratorKind kind);

/// Initial tracking errors relative to the reference at t = 0.
struct InitialConditions {
  Eigen::VectorXd e0;
  Eigen::VectorXd edot0;
  std::optional<Eigen::VectorXd> theta_hat0;
};

/// Everything one closed-loop run needs. Plant and reference are shared
/// read-only, so several setups can run concurrently.
struct RunSetup {
  std::shared_ptr<const Plant> plant;
  std::shared_ptr<const ReferenceTrajectory> reference;
  ConstraintSpec constraints;
  ControllerKind kind = ControllerKind::proposed;
  ControllerGains proposed;    ///< used when kind == proposed
  ClassicalGains classical;    ///< used when kind == classical
  InitialConditions initial;
  SimConfig sim;
};

struct LogRow {
  double t = 0.0;
  Eigen::VectorXd q, q_d, qdot, qdot_d;
  Eigen::VectorXd e, edot, r;
  Eigen::VectorXd tau, delta_tau;
  Eigen::VectorXd theta_hat;
  double e_norm = 0.0;
  double edot_norm = 0.0;
  double r_norm = 0.0;
  double tau_norm = 0.0;
  double dtau_norm = 0.0;
  double V = 0.0;              ///< NaN for the classical arm
  double Vdot_analytic = 0.0;  ///< closed-form rate; NaN for the classical arm
  double Vdot_exact = 0.0;     ///< closed form plus the Kd consistency defect
  ConstraintMargins margins;
};

struct TrajectoryLog {
  Eigen::Index dof = 0;
  Eigen::Index num_parameters = 0;
  std::vector<LogRow> rows;
};

enum class RunStatus { completed, constraint_violation, barrier_breach, numeric_failure };
enum class ViolationChannel { position, velocity, input, lyapunov };

std::string_view to_string(RunStatus status);
std::string_view to_string(ViolationChannel channel);

struct Violation {
  double t = 0.0;
  ViolationChannel channel = ViolationChannel::position;
  double value = 0.0;  ///< the negative margin, or the V increase
};

/// Checks one logged row against the safe sets and, when `previous_V` is
/// given, the discrete decrease condition V_k - V_{k-1} <= tol_V.
std::vector<Violation> monitor_step(const LogRow& row, std::optional<double> previous_V,
                                    double tol_V);

struct ChannelSummary {
  std::size_t count = 0;
  std::optional<double> first_time;
};

struct RunOutcome {
  RunStatus status = RunStatus::completed;
  std::string message;
  double t_final = 0.0;
  std::optional<Violation> first_violation;
  ChannelSummary position, velocity, input, lyapunov;

  double final_e_norm = 0.0;
  double final_edot_norm = 0.0;
  double final_r_norm = 0.0;
  double peak_r_norm = 0.0;
  double peak_tau_norm = 0.0;
  double peak_q_norm = 0.0;
  double peak_qdot_norm = 0.0;
  double peak_e_norm = 0.0;
  double peak_edot_norm = 0.0;

  bool lyapunov_checked = false;
  bool lyapunov_monotone = true;
  double lyapunov_tolerance = 0.0;
  double max_lyapunov_increase = 0.0;

  bool satisfied_constraints() const {
    return status == RunStatus::completed && position.count == 0 && velocity.count == 0 &&
           input.count == 0;
  }
};

struct RunResult {
  ControllerKind kind = ControllerKind::proposed;
  FeasibilityReport feasibility;
  InitialConditionCheck initial_check;
  TrajectoryLog log;
  RunOutcome outcome;
};

/// The coupled plant-controller ODE on the flattened augmented state
/// x = [q, qdot, theta_hat, vec(Kd), vec(K2), r1].
class ClosedLoop {
 public:
  /// Throws ConfigError if the setup is inconsistent.
  explicit ClosedLoop(const RunSetup& setup);

  Eigen::Index size() const { return 3 * n_ + m_ + 2 * n_ * n_; }

  Eigen::VectorXd pack(const PlantState& s, const ControllerState& cs) const;
  std::pair<PlantState, ControllerState> unpack(const Eigen::VectorXd& x) const;

  /// Saturation pattern given by the clamp rule at (t, x). Empty for the classical arm.
  SaturationPattern pattern_at(double t, const Eigen::VectorXd& x) const;

  /// dx/dt. `pattern` freezes the saturation branch, nullptr applies the clamp rule.
  /// Throws BarrierBreach, or NumericFailure naming the non-finite block.
  Eigen::VectorXd derivative(double t, const Eigen::VectorXd& x,
                             const SaturationPattern* pattern) const;

  /// One integrator step of size h from (t, x) with a fixed pattern (or the clamp rule).
  Eigen::VectorXd advance(double t, const Eigen::VectorXd& x, double h,
                          const SaturationPattern* pattern) const;

  /// One step of size dt. Sub-steps are split at saturation switching instants
  /// so each sub-step sees a smooth right-hand side. `events`, if given,
  /// receives the number of switches located.
  Eigen::VectorXd step(double t, const Eigen::VectorXd& x, double dt, int* events = nullptr) const;

  /// Builds the log row at (t, x). V uses the plant's true parameters.
  LogRow observe(double t, const Eigen::VectorXd& x) const;

  /// x(0) from the setup's initial conditions; Kd(0) = M(q0)^{-1}, K2(0) = 0, r1(0) = 0.
  Eigen::VectorXd initial_state() const;

  const RunSetup& setup() const { return setup_; }

 private:
  RunSetup setup_;
  Eigen::Index n_;
  Eigen::Index m_;
};

/// Advances (state, cs) by dt using the closed loop's integrator.
std::pair<PlantState, ControllerState> step(const ClosedLoop& loop, const PlantState& state,
                                            const ControllerState& cs, double t, double dt);

/// Validates the setup (feasibility, gains, initial conditions), integrates to
/// t_end or the first barrier breach / numeric failure, and monitors every logged row.
/// Configuration problems throw ConfigError before integration starts.
RunResult run(const RunSetup& setup);

/// Builds the proposed-arm feasibility report for a setup (reference suprema included).
FeasibilityReport feasibility_for(const RunSetup& setup);

}  // namespace safetrack
