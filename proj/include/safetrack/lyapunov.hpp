#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "safetrack/constraints.hpp"
#include "safetrack/controllers.hpp"

namespace safetrack {

/// Composite barrier Lyapunov function
///   V = 1/2 [ log(kappa^2 / (kappa^2 - r^T r)) + r_d^T r_d + theta~^T Gamma^{-1} theta~
///             + tr(Kd^T Gamma_d^{-1} Kd) + tr(K2^T Gamma_2^{-1} K2) ].
/// Throws BarrierBreach when ||r|| is at or beyond kappa.
double lyapunov_value(const Eigen::VectorXd& r, const Eigen::VectorXd& r_d,
                      const Eigen::VectorXd& theta_tilde, const Eigen::MatrixXd& Kd,
                      const Eigen::MatrixXd& K2, const ControllerGains& gains);

/// The closed-form rate -(w r^T K1 r + r_d^T K1 r_d), w = 1/(kappa^2 - r^T r).
double lyapunov_rate_analytic(const Eigen::VectorXd& r, const Eigen::VectorXd& r_d,
                              const Eigen::MatrixXd& K1, double kappa);

/// The part of dV/dt the closed form omits: (w r + r_d)^T (M^{-1} - K2 - Kd) dtau.
/// Zero while unsaturated, or while Kd happens to equal M^{-1} - K2.
double kd_consistency_defect_rate(const Eigen::VectorXd& r, const Eigen::VectorXd& r_d,
                                  const Eigen::MatrixXd& M, const Eigen::MatrixXd& Kd,
                                  const Eigen::MatrixXd& K2, const Eigen::VectorXd& delta_tau,
                                  double kappa);

/// tol_V = max(1e-6, 10 dt^2 scale).
double lyapunov_tolerance(double dt, double scale);

}  // namespace safetrack
