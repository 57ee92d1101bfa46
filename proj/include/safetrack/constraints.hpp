#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "safetrack/plant.hpp"
#include "safetrack/reference.hpp"

namespace safetrack {

/// Upper limit on the filter gain alpha: alpha^2 + alpha - 1 < 0.
inline const double kMaxFilterGain = (std::sqrt(5.0) - 1.0) / 2.0;

/// User-defined safe sets:
///   ||q|| < beta1,  ||qdot|| < beta2   (open)
///   ||tau|| <= tau_max                 (closed)
/// and bounds on the reference, ||q_d|| <= alpha1, ||qdot_d|| <= alpha2.
struct ConstraintSpec {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double tau_max = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  /// Throws ConfigError naming the first violated inequality.
  void validate() const;
};

struct FeasibilityReport {
  double delta1 = 0.0;  ///< beta1 - alpha1
  double delta2 = 0.0;  ///< beta2 - alpha2
  double delta = 0.0;   ///< min(delta1, delta2)
  double kappa = 0.0;   ///< barrier radius on ||r||
  double alpha = 0.0;
  bool gain_ok = false;
  bool ic_ok = false;

  std::optional<ReferenceBounds> measured_reference;
  std::vector<std::string> warnings;
};

/// delta_i = beta_i - alpha_i, delta = min, kappa = alpha delta / (1 + alpha).
FeasibilityReport derive_error_bounds(const ConstraintSpec& spec, double alpha);

/// Records sampled reference suprema in the report and warns if they exceed alpha1/alpha2.
void attach_reference_bounds(FeasibilityReport& report, const ConstraintSpec& spec,
                             const ReferenceBounds& bounds);

struct InitialConditionCheck {
  bool pass = false;
  double e_margin = 0.0;     ///< kappa - ||e(0)||
  double edot_margin = 0.0;  ///< delta2 - ||edot(0)||
  double r_margin = 0.0;     ///< kappa - ||edot(0) + alpha e(0)||
  std::vector<std::string> failures;
};

InitialConditionCheck check_initial_conditions(const Eigen::VectorXd& e0, const Eigen::VectorXd& edot0,
                                               const FeasibilityReport& report);

struct ConstraintMargins {
  double position = 0.0;  ///< beta1 - ||q||
  double velocity = 0.0;  ///< beta2 - ||qdot||
  double input = 0.0;     ///< tau_max - ||tau||

  // States live in open sets, the input in a closed one.
  bool position_violated() const { return !(position > 0.0); }
  bool velocity_violated() const { return !(velocity > 0.0); }
  bool input_violated() const { return !(input >= 0.0); }
  bool any_violated() const { return position_violated() || velocity_violated() || input_violated(); }
};

ConstraintMargins constraint_margins(const PlantState& state, const Eigen::VectorXd& tau,
                                     const ConstraintSpec& spec);

}  // namespace safetrack
