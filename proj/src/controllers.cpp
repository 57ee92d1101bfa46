#include "safetrack/controllers.hpp"

#include <cmath>
#include <string>

#include "safetrack/constraints.hpp"
#include "safetrack/errors.hpp"

namespace safetrack {

namespace {

void require_spd(const Eigen::MatrixXd& A, Eigen::Index n, const char* name) {
  if (A.rows() != n || A.cols() != n) {
    throw ConfigError(std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (!A.allFinite()) throw ConfigError(std::string(name) + " must be finite");
  if (!A.isApprox(A.transpose(), 1e-12)) throw ConfigError(std::string(name) + " must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    throw ConfigError(std::string(name) + " must be positive definite");
  }
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
}

}  // namespace

ControllerState ControllerState::zeros(Eigen::Index n, Eigen::Index m) {
  return ControllerState{Eigen::VectorXd::Zero(m), Eigen::MatrixXd::Zero(n, n),
                         Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
}

void ControllerState::validate(Eigen::Index n, Eigen::Index m) const {
  if (theta_hat.size() != m || Kd.rows() != n || Kd.cols() != n || K2.rows() != n ||
      K2.cols() != n || r1.size() != n) {
    throw InvalidInput("controller state dimension mismatch");
  }
  require_finite(theta_hat, "theta_hat");
  require_finite(Kd, "Kd");
  require_finite(K2, "K2");
  require_finite(r1, "r1");
}

void ControllerGains::validate(Eigen::Index n, Eigen::Index m) const {
  require_spd(K1, n, "K1");
  require_spd(Gamma, m, "Gamma");
  require_spd(Gamma_d, n, "Gamma_d");
  require_spd(Gamma_2, n, "Gamma_2");
  require_alpha(alpha);
  if (!(alpha < kMaxFilterGain)) {
    throw ConfigError("alpha = " + std::to_string(alpha) +
                      " violates the gain condition 0 < alpha < (sqrt(5) - 1)/2");
  }
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
}

void ClassicalGains::validate(Eigen::Index n, Eigen::Index m) const {
  require_spd(K1, n, "K1");
  require_finite(Gamma_c, "Gamma_c");
  if (Gamma_c.rows() != m || Gamma_c.cols() != m) throw ConfigError("Gamma_c has wrong shape");
  require_alpha(alpha);
}

Eigen::VectorXd filtered_error(const Eigen::VectorXd& e, const Eigen::VectorXd& edot, double alpha) {
  if (e.size() != edot.size()) throw InvalidInput("e and edot sizes differ");
  return edot + alpha * e;
}

Eigen::VectorXd auxiliary_input(const Regression& reg, const Eigen::VectorXd& theta_hat,
                                const Eigen::VectorXd& r, const Eigen::MatrixXd& K1,
                                const Eigen::MatrixXd& M) {
  // g^{-1} = M must exist; solve_spd throws NumericFailure otherwise.
  if (M.rows() != r.size() || M.cols() != r.size()) throw InvalidInput("auxiliary_input: M has wrong shape");
  solve_spd(M, Eigen::VectorXd(r));
  return M * (-(reg.Y * theta_hat + reg.bias) - K1 * r);
}

SaturationPattern saturation_pattern(const Eigen::VectorXd& v, double tau_max) {
  const double limit = tau_max / std::sqrt(static_cast<double>(v.size()));
  SaturationPattern p(static_cast<std::size_t>(v.size()), 0);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > limit) p[static_cast<std::size_t>(i)] = v(i) > 0.0 ? 1 : -1;
  }
  return p;
}

Saturated saturate_with(const Eigen::VectorXd& v, double tau_max, const SaturationPattern& pattern) {
  if (!(tau_max > 0.0)) throw InvalidInput("tau_max must be positive");
  if (pattern.size() != static_cast<std::size_t>(v.size())) {
    throw InvalidInput("saturation pattern size mismatch");
  }
  const double limit = tau_max / std::sqrt(static_cast<double>(v.size()));
  Saturated out{v, Eigen::VectorXd::Zero(v.size())};
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto mode = pattern[static_cast<std::size_t>(i)];
    if (mode != 0) out.tau(i) = limit * mode;
  }
  out.delta_tau = out.tau - v;
  return out;
}

Saturated saturate(const Eigen::VectorXd& v, double tau_max) {
  return saturate_with(v, tau_max, saturation_pattern(v, tau_max));
}

double barrier_weight(const Eigen::VectorXd& r, double kappa) {
  const double rr = r.squaredNorm();
  const double r_norm = std::sqrt(rr);
  if (!std::isfinite(rr)) throw NumericFailure("non-finite filtered error r");
  if (!(r_norm < kappa * (1.0 - kBarrierGuard))) throw BarrierBreach(r_norm, kappa);
  return 1.0 / (kappa * kappa - rr);
}

AdaptationRates proposed_step_derivatives(const ControllerState& cs, const Eigen::VectorXd& r,
                                          const Eigen::MatrixXd& Y, const Eigen::VectorXd& delta_tau,
                                          const ControllerGains& gains) {
  const double w = barrier_weight(r, gains.kappa);
  const Eigen::VectorXd r_d = r - cs.r1;
  const Eigen::VectorXd s = w * r + r_d;
  AdaptationRates out;
  out.theta_hat = gains.Gamma * (Y.transpose() * s);
  out.Kd = -gains.Gamma_d * s * delta_tau.transpose();
  out.K2 = -gains.Gamma_2 * (w * r) * delta_tau.transpose();
  out.r1 = -gains.K1 * cs.r1 + cs.K2 * delta_tau;
  return out;
}

namespace {

ControlDiagnostics tracking_errors(const PlantState& state, const ReferenceSample& ref, double alpha) {
  ControlDiagnostics d;
  d.e = state.q - ref.q;
  d.edot = state.qdot - ref.qdot;
  d.r = filtered_error(d.e, d.edot, alpha);
  return d;
}

}  // namespace

ControlOutput proposed_control(const ControllerState& cs, const PlantState& state,
                               const ReferenceSample& ref, const ControllerGains& gains,
                               const Plant& plant, double tau_max, const SaturationPattern* pattern) {
  ControlOutput out;
  out.diag = tracking_errors(state, ref, gains.alpha);
  out.diag.w = barrier_weight(out.diag.r, gains.kappa);
  out.diag.r_d = out.diag.r - cs.r1;
  out.regression = plant.regressor(state, ref, gains.alpha);
  out.M = plant.inertia(state);
  out.v = auxiliary_input(out.regression, cs.theta_hat, out.diag.r, gains.K1, out.M);
  Saturated sat = pattern ? saturate_with(out.v, tau_max, *pattern) : saturate(out.v, tau_max);
  out.tau = std::move(sat.tau);
  out.delta_tau = std::move(sat.delta_tau);
  return out;
}

ClassicalOutput classical_control(const Eigen::VectorXd& theta_hat_c, const PlantState& state,
                                  const ReferenceSample& ref, const ClassicalGains& gains,
                                  const Plant& plant) {
  ClassicalOutput out;
  out.diag = tracking_errors(state, ref, gains.alpha);
  out.diag.r_d = out.diag.r;
  out.regression = plant.regressor(state, ref, gains.alpha);
  out.M = plant.inertia(state);
  out.tau = auxiliary_input(out.regression, theta_hat_c, out.diag.r, gains.K1, out.M);
  out.theta_hat_dot = gains.Gamma_c * (out.regression.Y.transpose() * out.diag.r);
  return out;
}

}  // namespace safetrack
