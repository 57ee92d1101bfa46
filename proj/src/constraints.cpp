#include "safetrack/constraints.hpp"

#include <algorithm>
#include <sstream>

#include "safetrack/errors.hpp"

namespace safetrack {

void ConstraintSpec::validate() const {
  for (double v : {beta1, beta2, tau_max, alpha1, alpha2}) {
    if (!std::isfinite(v)) throw ConfigError("constraint levels must be finite");
  }
  if (!(alpha1 > 0.0)) throw ConfigError("constraints: requires alpha1 > 0");
  if (!(alpha2 > 0.0)) throw ConfigError("constraints: requires alpha2 > 0");
  if (!(alpha1 < beta1)) {
    throw ConfigError("constraints: reference bound requires alpha1 < beta1 (got alpha1=" +
                      std::to_string(alpha1) + ", beta1=" + std::to_string(beta1) + ")");
  }
  if (!(alpha2 < beta2)) {
    throw ConfigError("constraints: reference bound requires alpha2 < beta2 (got alpha2=" +
                      std::to_string(alpha2) + ", beta2=" + std::to_string(beta2) + ")");
  }
  if (!(tau_max > 0.0)) throw ConfigError("constraints: requires tau_max > 0");
}

FeasibilityReport derive_error_bounds(const ConstraintSpec& spec, double alpha) {
  spec.validate();
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("filter gain alpha must be a positive finite number");
  }
  FeasibilityReport r;
  r.delta1 = spec.beta1 - spec.alpha1;
  r.delta2 = spec.beta2 - spec.alpha2;
  r.delta = std::min(r.delta1, r.delta2);
  r.alpha = alpha;
  r.kappa = alpha * r.delta / (1.0 + alpha);
  r.gain_ok = alpha < kMaxFilterGain;
  return r;
}

void attach_reference_bounds(FeasibilityReport& report, const ConstraintSpec& spec,
                             const ReferenceBounds& bounds) {
  report.measured_reference = bounds;
  if (bounds.max_position_norm > spec.alpha1) {
    std::ostringstream os;
    os.precision(6);
    os << "sampled sup ||q_d|| = " << bounds.max_position_norm << " exceeds alpha1 = " << spec.alpha1;
    report.warnings.push_back(os.str());
  }
  if (bounds.max_velocity_norm > spec.alpha2) {
    std::ostringstream os;
    os.precision(6);
    os << "sampled sup ||qdot_d|| = " << bounds.max_velocity_norm
       << " exceeds alpha2 = " << spec.alpha2;
    report.warnings.push_back(os.str());
  }
}

InitialConditionCheck check_initial_conditions(const Eigen::VectorXd& e0, const Eigen::VectorXd& edot0,
                                               const FeasibilityReport& report) {
  if (e0.size() != edot0.size()) throw InvalidInput("e0 and edot0 sizes differ");
  InitialConditionCheck c;
  const double e_norm = e0.norm();
  const double r_norm = (edot0 + report.alpha * e0).norm();
  c.e_margin = report.kappa - e_norm;
  c.edot_margin = report.delta2 - edot0.norm();
  c.r_margin = report.kappa - r_norm;
  if (!(c.e_margin > 0.0)) c.failures.push_back("||e(0)|| < kappa");
  if (!(c.edot_margin > 0.0)) c.failures.push_back("||edot(0)|| < delta2");
  if (!(c.r_margin > 0.0)) c.failures.push_back("||r(0)|| < kappa");
  c.pass = c.failures.empty();
  return c;
}

ConstraintMargins constraint_margins(const PlantState& state, const Eigen::VectorXd& tau,
                                     const ConstraintSpec& spec) {
  if (tau.size() != state.q.size() || state.qdot.size() != state.q.size()) {
    throw InvalidInput("constraint_margins: dimension mismatch");
  }
  return ConstraintMargins{spec.beta1 - state.q.norm(), spec.beta2 - state.qdot.norm(),
                           spec.tau_max - tau.norm()};
}

}  // namespace safetrack
