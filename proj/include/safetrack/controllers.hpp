#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "safetrack/plant.hpp"

namespace safetrack {

/// Adapted quantities of the constrained controller.
struct ControllerState {
  Eigen::VectorXd theta_hat;  ///< m
  Eigen::MatrixXd Kd;         ///< n x n
  Eigen::MatrixXd K2;         ///< n x n
  Eigen::VectorXd r1;         ///< n, auxiliary error

  static ControllerState zeros(Eigen::Index n, Eigen::Index m);
  void validate(Eigen::Index n, Eigen::Index m) const;
};

struct ControllerGains {
  Eigen::MatrixXd K1;       ///< n x n feedback gain
  Eigen::MatrixXd Gamma;    ///< m x m parameter adaptation gain
  Eigen::MatrixXd Gamma_d;  ///< n x n
  Eigen::MatrixXd Gamma_2;  ///< n x n
  double alpha = 0.0;       ///< filter gain in r = edot + alpha e
  double kappa = 0.0;       ///< barrier radius on ||r||

  /// Throws ConfigError on wrong shapes, non-SPD matrices or alpha outside (0, kMaxFilterGain).
  void validate(Eigen::Index n, Eigen::Index m) const;
};

/// Gains of the unconstrained gradient-adaptive baseline.
struct ClassicalGains {
  Eigen::MatrixXd K1;
  Eigen::MatrixXd Gamma_c;
  double alpha = 0.0;

  void validate(Eigen::Index n, Eigen::Index m) const;
};

/// r = edot + alpha e.
Eigen::VectorXd filtered_error(const Eigen::VectorXd& e, const Eigen::VectorXd& edot, double alpha);

/// v = M (-(Y theta_hat + bias) - K1 r).
Eigen::VectorXd auxiliary_input(const Regression& reg, const Eigen::VectorXd& theta_hat,
                                const Eigen::VectorXd& r, const Eigen::MatrixXd& K1,
                                const Eigen::MatrixXd& M);

/// Per-channel saturation state: -1 / +1 clamped at -/+ tau_max/sqrt(n), 0 passes through.
using SaturationPattern = std::vector<std::int8_t>;

/// Pattern selected by the clamp rule: channel i saturates iff |v_i| > tau_max/sqrt(n).
SaturationPattern saturation_pattern(const Eigen::VectorXd& v, double tau_max);

struct Saturated {
  Eigen::VectorXd tau;
  Eigen::VectorXd delta_tau;  ///< tau - v
};

/// Component-wise clamp at tau_max/sqrt(n); guarantees ||tau|| <= tau_max.
Saturated saturate(const Eigen::VectorXd& v, double tau_max);

/// Applies a fixed pattern instead of the clamp rule. Used by the integrator
/// to keep the right-hand side smooth inside a sub-step.
Saturated saturate_with(const Eigen::VectorXd& v, double tau_max, const SaturationPattern& pattern);

struct AdaptationRates {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd Kd;
  Eigen::MatrixXd K2;
  Eigen::VectorXd r1;
};

/// Relative guard below kappa at which the barrier is declared breached.
inline constexpr double kBarrierGuard = 1e-9;

/// 1 / (kappa^2 - r^T r). Throws BarrierBreach once ||r|| >= kappa (1 - kBarrierGuard).
double barrier_weight(const Eigen::VectorXd& r, double kappa);

/// Adaptive laws of the constrained controller. With w = barrier_weight(r),
/// r_d = r - r1 and s = w r + r_d:
///   theta_hat' = Gamma Y^T s
///   Kd'        = -Gamma_d s dtau^T
///   K2'        = -Gamma_2 w r dtau^T
///   r1'        = -K1 r1 + K2 dtau
AdaptationRates proposed_step_derivatives(const ControllerState& cs, const Eigen::VectorXd& r,
                                          const Eigen::MatrixXd& Y, const Eigen::VectorXd& delta_tau,
                                          const ControllerGains& gains);

struct ControlDiagnostics {
  Eigen::VectorXd e;
  Eigen::VectorXd edot;
  Eigen::VectorXd r;
  Eigen::VectorXd r_d;
  double w = 0.0;
};

struct ControlOutput {
  Eigen::VectorXd tau;
  Eigen::VectorXd v;
  Eigen::VectorXd delta_tau;
  Regression regression;
  Eigen::MatrixXd M;
  ControlDiagnostics diag;
};

/// Full evaluation of the constrained controller at one instant. When
/// `pattern` is given it replaces the clamp rule (see saturate_with).
ControlOutput proposed_control(const ControllerState& cs, const PlantState& state,
                               const ReferenceSample& ref, const ControllerGains& gains,
                               const Plant& plant, double tau_max,
                               const SaturationPattern* pattern = nullptr);

struct ClassicalOutput {
  Eigen::VectorXd tau;
  Eigen::VectorXd theta_hat_dot;
  Regression regression;
  Eigen::MatrixXd M;
  ControlDiagnostics diag;
};

/// tau_c = M (-(Y theta_hat_c + bias) - K1 r), theta_hat_c' = Gamma_c Y^T r.
ClassicalOutput classical_control(const Eigen::VectorXd& theta_hat_c, const PlantState& state,
                                  const ReferenceSample& ref, const ClassicalGains& gains,
                                  const Plant& plant);

}  // namespace safetrack
