#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "safetrack/errors.hpp"
#include "safetrack/two_link.hpp"
#include "support/fixtures.hpp"
#include "support/pendulum.hpp"

using namespace safetrack;
using safetrack::testing::nominal_params;

namespace {

PlantState state(double q1, double q2, double qd1 = 0.0, double qd2 = 0.0) {
  return PlantState{Eigen::Vector2d(q1, q2), Eigen::Vector2d(qd1, qd2)};
}

// Hand-written model used as the oracle; deliberately does not call TwoLinkArm.
struct Oracle {
  double p1 = 3.473, p2 = 0.196, p3 = 0.242, f1 = 5.3, f2 = 1.1;

  Eigen::Matrix2d M(double q2) const {
    const double c2 = std::cos(q2);
    Eigen::Matrix2d m;
    m << p1 + 2 * p3 * c2, p2 + p3 * c2, p2 + p3 * c2, p2;
    return m;
  }
  Eigen::Matrix2d Vm(double q2, double qd1, double qd2) const {
    const double s2 = std::sin(q2);
    Eigen::Matrix2d v;
    v << -p3 * s2 * qd2, -p3 * s2 * (qd1 + qd2), p3 * s2 * qd1, 0.0;
    return v;
  }
};

}  // namespace

TEST(TwoLinkInertia, MatchesHandValuesAtStraightArm) {
  TwoLinkArm arm(nominal_params());
  Eigen::Matrix2d expected;
  expected << 3.957, 0.438, 0.438, 0.196;
  EXPECT_LT((arm.inertia(state(0, 0)) - expected).norm(), 1e-12);
}

TEST(TwoLinkInertia, CouplingTermsVanishAtRightAngle) {
  TwoLinkArm arm(nominal_params());
  Eigen::Matrix2d expected;
  expected << 3.473, 0.196, 0.196, 0.196;
  EXPECT_LT((arm.inertia(state(0, std::numbers::pi / 2)) - expected).norm(), 1e-12);
}

TEST(TwoLinkInertia, SymmetricAndPositiveDefiniteEverywhere) {
  TwoLinkArm arm(nominal_params());
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> angle(-10.0, 10.0);
  for (int i = 0; i < 10000; ++i) {
    const Eigen::MatrixXd M = arm.inertia(state(angle(rng), angle(rng)));
    ASSERT_EQ((M - M.transpose()).norm(), 0.0);
    // Closed-form 2x2 eigenvalues.
    const double tr = M.trace(), det = M.determinant();
    const double disc = std::sqrt(tr * tr / 4 - det);
    ASSERT_GT(tr / 2 - disc, 0.0);
  }
}

TEST(TwoLinkParams, RejectsIndefiniteInertia) {
  TwoLinkParams p = nominal_params();
  p.p1 = 0.3;
  EXPECT_THROW(p.validate(), ConfigError);
  p = nominal_params();
  p.fd1 = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(TwoLinkForces, ZeroAtRest) {
  TwoLinkArm arm(nominal_params());
  EXPECT_EQ(arm.forces(state(0.3, -1.2)).norm(), 0.0);
}

TEST(TwoLinkForces, HandEvaluatedAtRightAngle) {
  TwoLinkArm arm(nominal_params());
  const Eigen::VectorXd f = arm.forces(state(0, std::numbers::pi / 2, 1.0, 0.0));
  EXPECT_NEAR(f(0), 5.3, 1e-12);
  EXPECT_NEAR(f(1), 0.242, 1e-12);
}

TEST(TwoLinkForces, CoriolisProductIsLinearInMultipliedVelocity) {
  TwoLinkArm arm(nominal_params());
  const PlantState s = state(0.4, 0.9, 0.7, -0.3);
  const Eigen::Matrix2d C = arm.coriolis(s);
  const Eigen::Vector2d once = C * s.qdot;
  const Eigen::Vector2d twice = C * (2.0 * s.qdot);
  EXPECT_LT((twice - 2.0 * once).norm(), 1e-15);
}

TEST(TwoLinkAcceleration, RestWithZeroInputStaysAtRest) {
  TwoLinkArm arm(nominal_params());
  EXPECT_EQ(arm.acceleration(state(0.2, 0.1), Eigen::Vector2d::Zero()).norm(), 0.0);
}

TEST(TwoLinkAcceleration, UnitTorqueMatchesClosedFormInverse) {
  TwoLinkArm arm(nominal_params());
  const double a = 3.957, b = 0.438, d = 0.196;
  const double det = a * d - b * b;
  const Eigen::Vector2d expected(d / det, -b / det);
  EXPECT_LT((arm.acceleration(state(0, 0), Eigen::Vector2d(1, 0)) - expected).norm(), 1e-12);
}

TEST(TwoLinkAcceleration, SatisfiesEquationOfMotion) {
  TwoLinkArm arm(nominal_params());
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const PlantState s = state(u(rng), u(rng), u(rng), u(rng));
    const Eigen::Vector2d tau(u(rng), u(rng));
    const Eigen::VectorXd residual = arm.inertia(s) * arm.acceleration(s, tau) + arm.forces(s) - tau;
    ASSERT_LT(residual.norm(), 1e-12);
  }
}

TEST(TwoLinkAcceleration, RejectsBadInput) {
  TwoLinkArm arm(nominal_params());
  EXPECT_THROW(arm.acceleration(state(0, 0), Eigen::Vector3d::Zero()), InvalidInput);
  EXPECT_THROW(arm.acceleration(state(0, 0), Eigen::Vector2d(NAN, 0)), InvalidInput);
}

TEST(TwoLinkRegressor, ReproducesDirectDynamicsAtRandomStates) {
  TwoLinkArm arm(nominal_params());
  Oracle o;
  const Eigen::Vector3d theta(0.242, 5.3, 1.1);
  const double alpha = 0.6;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const PlantState s = state(2.5 * u(rng), 2.5 * u(rng), 1.4 * u(rng), 1.4 * u(rng));
    ReferenceSample ref{Eigen::Vector2d(u(rng), u(rng)), Eigen::Vector2d(0.5 * u(rng), 0.5 * u(rng)),
                        Eigen::Vector2d(u(rng), u(rng))};
    const Regression reg = arm.regressor(s, ref, alpha);
    const Eigen::Matrix2d M = o.M(s.q(1));
    const Eigen::Vector2d edot = s.qdot - ref.qdot;
    const Eigen::Vector2d rhs = -o.Vm(s.q(1), s.qdot(0), s.qdot(1)) * s.qdot -
                                Eigen::Vector2d(o.f1 * s.qdot(0), o.f2 * s.qdot(1)) -
                                M * ref.qddot + M * alpha * edot;
    const Eigen::Vector2d expected = M.inverse() * rhs;
    ASSERT_LT((reg.Y * theta + reg.bias - expected).norm(), 1e-10);
  }
}

TEST(TwoLinkRegressor, PerfectTrackingLeavesOnlyPlantForces) {
  TwoLinkArm arm(nominal_params());
  const PlantState s = state(0.3, 1.1, 0.4, -0.2);
  ReferenceSample ref{s.q, s.qdot, Eigen::Vector2d::Zero()};
  const Regression reg = arm.regressor(s, ref, 0.6);
  EXPECT_EQ(reg.bias.norm(), 0.0);
  const Eigen::VectorXd expected = -solve_spd(arm.inertia(s), arm.forces(s));
  EXPECT_LT((reg.Y * arm.true_parameters() - expected).norm(), 1e-14);
}

TEST(TwoLinkRegressor, KnownPartIsCarriedOutsideY) {
  TwoLinkArm arm(nominal_params());
  const PlantState s = state(0.3, 1.1, 0.4, -0.2);
  ReferenceSample ref{Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d(0.3, 0.1), Eigen::Vector2d(-0.5, 0.7)};
  const Regression reg = arm.regressor(s, ref, 0.6);
  const Eigen::Vector2d expected = -ref.qddot + 0.6 * (s.qdot - ref.qdot);
  EXPECT_LT((reg.Y * Eigen::Vector3d::Zero() + reg.bias - expected).norm(), 1e-15);
}

TEST(PlantInterface, WorksForSingleJointPlant) {
  safetrack::testing::Pendulum p(2.0, 0.5, 3.0);
  const PlantState s{Eigen::VectorXd::Constant(1, 0.4), Eigen::VectorXd::Constant(1, -0.3)};
  const Eigen::VectorXd tau = Eigen::VectorXd::Constant(1, 1.5);
  const double expected = (1.5 - 0.5 * -0.3 - 3.0 * std::sin(0.4)) / 2.0;
  EXPECT_NEAR(p.acceleration(s, tau)(0), expected, 1e-15);
  EXPECT_LT((p.force_regressor(s) * p.true_parameters() + p.forces(s)).norm(), 1e-15);
}

TEST(SolveSpd, ReportsSingularMatrix) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2, 2);
  M(0, 0) = 1.0;
  try {
    solve_spd(M, Eigen::VectorXd(Eigen::Vector2d(1, 1)));
    FAIL() << "expected NumericFailure";
  } catch (const NumericFailure& e) {
    EXPECT_LE(e.condition_estimate(), 1e-14);
  }
}
