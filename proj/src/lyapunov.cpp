#include "safetrack/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "safetrack/errors.hpp"

namespace safetrack {

namespace {

// tr(A^T G^{-1} A) for SPD G.
double weighted_trace(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G) {
  return (A.transpose() * solve_spd(G, A)).trace();
}

}  // namespace

double lyapunov_value(const Eigen::VectorXd& r, const Eigen::VectorXd& r_d,
                      const Eigen::VectorXd& theta_tilde, const Eigen::MatrixXd& Kd,
                      const Eigen::MatrixXd& K2, const ControllerGains& gains) {
  const double w = barrier_weight(r, gains.kappa);
  const double barrier = std::log(gains.kappa * gains.kappa * w);
  const double params = theta_tilde.dot(solve_spd(gains.Gamma, theta_tilde));
  return 0.5 * (barrier + r_d.squaredNorm() + params + weighted_trace(Kd, gains.Gamma_d) +
                weighted_trace(K2, gains.Gamma_2));
}

double lyapunov_rate_analytic(const Eigen::VectorXd& r, const Eigen::VectorXd& r_d,
                              const Eigen::MatrixXd& K1, double kappa) {
  const double w = barrier_weight(r, kappa);
  return -(w * r.dot(K1 * r) + r_d.dot(K1 * r_d));
}

double kd_consistency_defect_rate(const Eigen::VectorXd& r, const Eigen::VectorXd& r_d,
                                  const Eigen::MatrixXd& M, const Eigen::MatrixXd& Kd,
                                  const Eigen::MatrixXd& K2, const Eigen::VectorXd& delta_tau,
                                  double kappa) {
  if (delta_tau.isZero(0.0)) return 0.0;
  const double w = barrier_weight(r, kappa);
  const Eigen::VectorXd s = w * r + r_d;
  const Eigen::VectorXd g_dtau = solve_spd(M, delta_tau);
  return s.dot(g_dtau - (K2 + Kd) * delta_tau);
}

double lyapunov_tolerance(double dt, double scale) {
  return std::max(1e-6, 10.0 * dt * dt * scale);
}

}  // namespace safetrack
