#include "safetrack/plant.hpp"

#include <string>

#include "safetrack/errors.hpp"

namespace safetrack {

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& x, std::string_view what) {
  if (!x.allFinite()) {
    throw InvalidInput(std::string(what) + " contains non-finite entries");
  }
}

void PlantState::validate(Eigen::Index n) const {
  if (q.size() != n || qdot.size() != n) {
    throw InvalidInput("plant state dimension mismatch: expected " + std::to_string(n) +
                       ", got q=" + std::to_string(q.size()) +
                       " qdot=" + std::to_string(qdot.size()));
  }
  require_finite(q, "q");
  require_finite(qdot, "qdot");
}

namespace {

constexpr double kMinReciprocalCondition = 1e-14;

Eigen::LDLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& M) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericFailure("matrix is not positive definite", 0.0);
  }
  // LDLT silently pseudo-inverts zero pivots, so check them before trusting rcond.
  const Eigen::VectorXd d = ldlt.vectorD();
  if (!(d.minCoeff() > kMinReciprocalCondition * d.maxCoeff())) {
    throw NumericFailure("matrix is numerically singular (pivot ratio " +
                             std::to_string(d.minCoeff() / d.maxCoeff()) + ")",
                         0.0);
  }
  const double rcond = ldlt.rcond();
  if (!(rcond > kMinReciprocalCondition)) {
    throw NumericFailure("matrix is numerically singular (rcond=" + std::to_string(rcond) + ")",
                         rcond);
  }
  return ldlt;
}

}  // namespace

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& M, const Eigen::VectorXd& b) {
  return factor_spd(M).solve(b);
}

Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& M, const Eigen::MatrixXd& B) {
  return factor_spd(M).solve(B);
}

Eigen::VectorXd Plant::acceleration(const PlantState& s, const Eigen::VectorXd& tau) const {
  s.validate(dof());
  if (tau.size() != dof()) throw InvalidInput("tau dimension mismatch");
  require_finite(tau, "tau");
  return solve_spd(inertia(s), Eigen::VectorXd(tau - forces(s)));
}

Regression Plant::regressor(const PlantState& s, const ReferenceSample& ref, double alpha) const {
  s.validate(dof());
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be positive");
  if (ref.q.size() != dof() || ref.qdot.size() != dof() || ref.qddot.size() != dof()) {
    throw InvalidInput("reference dimension mismatch");
  }
  Regression out;
  out.Y = solve_spd(inertia(s), force_regressor(s));
  out.bias = -ref.qddot + alpha * (s.qdot - ref.qdot);
  return out;
}

}  // namespace safetrack
