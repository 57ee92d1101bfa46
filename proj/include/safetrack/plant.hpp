#pragma once

#include <Eigen/Dense>
#include <string_view>

namespace safetrack {

/// Generalized positions and velocities of an n-DOF Euler-Lagrange system.
struct PlantState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;

  Eigen::Index dof() const { return q.size(); }

  /// Throws InvalidInput unless both vectors have size n and are finite.
  void validate(Eigen::Index n) const;
};

/// Desired position, velocity and acceleration at one instant.
struct ReferenceSample {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
  Eigen::VectorXd qddot;
};

/// Linear parameterization of the filtered-error drift:
///   rdot = Y theta + bias + M^{-1} tau,
/// where bias = -qddot_d + alpha * edot carries the parameter-free part.
struct Regression {
  Eigen::MatrixXd Y;
  Eigen::VectorXd bias;
};

/// Euler-Lagrange plant  M(q) qddot + V_m(q, qdot) qdot + F_d qdot + G_r(q) = tau.
///
/// The inertia matrix is known to the controller. The remaining forces are
/// linear in the unknown parameter vector theta through force_regressor():
///   force_regressor(s) * theta == -forces(s).
/// Implementations hold their true parameters; controllers only ever see
/// inertia() and regressor().
class Plant {
 public:
  virtual ~Plant() = default;

  virtual std::string_view name() const = 0;
  virtual Eigen::Index dof() const = 0;
  virtual Eigen::Index num_parameters() const = 0;

  /// M(q). Symmetric positive definite.
  virtual Eigen::MatrixXd inertia(const PlantState& s) const = 0;

  /// V_m(q, qdot) qdot + F_d qdot + G_r(q) evaluated with the true parameters.
  virtual Eigen::VectorXd forces(const PlantState& s) const = 0;

  /// W(q, qdot), n x m, with W theta = -forces(s).
  virtual Eigen::MatrixXd force_regressor(const PlantState& s) const = 0;

  /// The true theta. Used by the simulator for diagnostics only.
  virtual Eigen::VectorXd true_parameters() const = 0;

  /// qddot = M^{-1} (tau - forces).
  Eigen::VectorXd acceleration(const PlantState& s, const Eigen::VectorXd& tau) const;

  /// Y = M^{-1} W and bias = -qddot_d + alpha (qdot - qdot_d).
  Regression regressor(const PlantState& s, const ReferenceSample& ref, double alpha) const;
};

/// Solves M x = b for symmetric positive definite M. Throws NumericFailure
/// carrying the reciprocal condition estimate when M is not safely SPD.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& M, const Eigen::VectorXd& b);
Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& M, const Eigen::MatrixXd& B);

/// Throws InvalidInput if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& x, std::string_view what);

}  // namespace safetrack
