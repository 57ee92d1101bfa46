#include "safetrack/two_link.hpp"

#include <cmath>

#include "safetrack/errors.hpp"

namespace safetrack {

void TwoLinkParams::validate() const {
  for (double v : {p1, p2, p3, fd1, fd2}) {
    if (!std::isfinite(v)) throw ConfigError("two_link parameters must be finite");
  }
  if (!(p1 > 0.0) || !(p2 > 0.0)) throw ConfigError("two_link: p1 and p2 must be positive");
  if (fd1 < 0.0 || fd2 < 0.0) throw ConfigError("two_link: friction coefficients must be non-negative");
  // Positive definiteness of M for every q2: p2 > 0 and det > 0 at c2 = +-1.
  for (double c2 : {-1.0, 1.0}) {
    const double det = (p1 + 2.0 * p3 * c2) * p2 - (p2 + p3 * c2) * (p2 + p3 * c2);
    if (!(det > 0.0)) throw ConfigError("two_link: inertia matrix not positive definite for all q");
  }
}

TwoLinkArm::TwoLinkArm(const TwoLinkParams& params) : params_(params) { params_.validate(); }

Eigen::MatrixXd TwoLinkArm::inertia(const PlantState& s) const {
  s.validate(2);
  const auto& p = params_;
  const double c2 = std::cos(s.q(1));
  Eigen::MatrixXd M(2, 2);
  M << p.p1 + 2.0 * p.p3 * c2, p.p2 + p.p3 * c2,
       p.p2 + p.p3 * c2,       p.p2;
  return M;
}

Eigen::Matrix2d TwoLinkArm::coriolis(const PlantState& s) const {
  s.validate(2);
  const double ps2 = params_.p3 * std::sin(s.q(1));
  const double qd1 = s.qdot(0);
  const double qd2 = s.qdot(1);
  Eigen::Matrix2d Vm;
  Vm << -ps2 * qd2, -ps2 * (qd1 + qd2),
         ps2 * qd1,  0.0;
  return Vm;
}

Eigen::VectorXd TwoLinkArm::forces(const PlantState& s) const {
  Eigen::VectorXd f = coriolis(s) * s.qdot;
  f(0) += params_.fd1 * s.qdot(0);
  f(1) += params_.fd2 * s.qdot(1);
  return f;
}

Eigen::MatrixXd TwoLinkArm::force_regressor(const PlantState& s) const {
  s.validate(2);
  const double s2 = std::sin(s.q(1));
  const double qd1 = s.qdot(0);
  const double qd2 = s.qdot(1);
  // Columns: p3 (Coriolis), fd1, fd2.
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2, 3);
  W(0, 0) = s2 * qd2 * qd1 + s2 * (qd1 + qd2) * qd2;
  W(1, 0) = -s2 * qd1 * qd1;
  W(0, 1) = -qd1;
  W(1, 2) = -qd2;
  return W;
}

Eigen::VectorXd TwoLinkArm::true_parameters() const {
  return Eigen::Vector3d(params_.p3, params_.fd1, params_.fd2);
}

}  // namespace safetrack
