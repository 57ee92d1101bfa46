#pragma once

#include "safetrack/plant.hpp"

namespace safetrack {

/// Physical constants of the planar two-link arm.
///
/// p1, p2, p3 are the lumped inertia constants (kg m^2), fd1, fd2 the viscous
/// friction coefficients (N m s). The unknown parameter vector is
/// theta = [p3, fd1, fd2]; p3 also enters M(q), which is treated as known.
struct TwoLinkParams {
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
  double fd1 = 0.0;
  double fd2 = 0.0;

  void validate() const;
};

/// Two-link manipulator with
///   M = [[p1 + 2 p3 c2, p2 + p3 c2], [p2 + p3 c2, p2]],
///   V_m = p3 s2 [[-qdot2, -(qdot1 + qdot2)], [qdot1, 0]],
///   F_d = diag(fd1, fd2), G_r = 0.
class TwoLinkArm final : public Plant {
 public:
  explicit TwoLinkArm(const TwoLinkParams& params);

  std::string_view name() const override { return "two_link"; }
  Eigen::Index dof() const override { return 2; }
  Eigen::Index num_parameters() const override { return 3; }

  Eigen::MatrixXd inertia(const PlantState& s) const override;
  Eigen::VectorXd forces(const PlantState& s) const override;
  Eigen::MatrixXd force_regressor(const PlantState& s) const override;
  Eigen::VectorXd true_parameters() const override;

  /// V_m(q, qdot) itself, for tests and diagnostics.
  Eigen::Matrix2d coriolis(const PlantState& s) const;

  const TwoLinkParams& params() const { return params_; }

 private:
  TwoLinkParams params_;
};

}  // namespace safetrack
