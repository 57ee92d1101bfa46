#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "safetrack/errors.hpp"
#include "safetrack/scenario.hpp"
#include "safetrack/simulation.hpp"
#include "support/fixtures.hpp"
#include "support/pendulum.hpp"

using namespace safetrack;
using safetrack::testing::bundled_scenario;

namespace {

RunSetup bundled(ControllerKind kind, double t_end) {
  Scenario s = bundled_scenario();
  s.sim.t_end = t_end;
  return make_setup(s, kind);
}

RunSetup pendulum_setup(double dt, double t_end) {
  RunSetup setup;
  setup.plant = std::make_shared<safetrack::testing::Pendulum>(1.0, 0.4, 2.0);
  setup.reference = std::make_shared<SinusoidReference>(Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Zero(1),
                                                        Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Zero(1));
  setup.constraints = ConstraintSpec{3.0, 3.0, 100.0, 1.0, 1.0};
  setup.kind = ControllerKind::proposed;
  const FeasibilityReport f = derive_error_bounds(setup.constraints, 0.5);
  const Eigen::MatrixXd I1 = Eigen::MatrixXd::Identity(1, 1);
  setup.proposed = ControllerGains{5 * I1, 2 * Eigen::MatrixXd::Identity(2, 2), I1, I1, 0.5, f.kappa};
  setup.initial = InitialConditions{Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Zero(1), std::nullopt};
  setup.sim.dt = dt;
  setup.sim.t_end = t_end;
  return setup;
}

Eigen::VectorXd final_state(const RunSetup& setup) {
  const RunResult r = run(setup);
  EXPECT_EQ(r.outcome.status, RunStatus::completed) << r.outcome.message;
  const LogRow& last = r.log.rows.back();
  Eigen::VectorXd x(2 * last.q.size() + last.theta_hat.size());
  x << last.q, last.qdot, last.theta_hat;
  return x;
}

class NanAfter final : public ReferenceTrajectory {
 public:
  explicit NanAfter(double t_bad) : t_bad_(t_bad) {}
  std::string_view name() const override { return "nan_after"; }
  Eigen::Index dof() const override { return 2; }
  ReferenceSample sample(double t) const override {
    const double v = t < t_bad_ ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    return ReferenceSample{Eigen::Vector2d(v, 0), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  }

 private:
  double t_bad_;
};

}  // namespace

TEST(Monitor, CleanRowHasNoViolations) {
  LogRow row;
  row.t = 1.0;
  row.V = 0.5;
  row.margins = ConstraintMargins{1.0, 1.0, 1.0};
  EXPECT_TRUE(monitor_step(row, 0.6, 1e-6).empty());
}

TEST(Monitor, PositionViolationCarriesTimestamp) {
  LogRow row;
  row.t = 2.5;
  row.V = 0.0;
  row.margins = ConstraintMargins{3.6 - 3.61, 1.0, 1.0};
  const auto v = monitor_step(row, std::nullopt, 1e-6);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].channel, ViolationChannel::position);
  EXPECT_EQ(v[0].t, 2.5);
  EXPECT_LT(v[0].value, 0.0);
}

TEST(Monitor, SmallLyapunovIncreaseWithinTolerance) {
  LogRow row;
  row.V = 1.0 + 1e-8;
  row.margins = ConstraintMargins{1.0, 1.0, 1.0};
  EXPECT_TRUE(monitor_step(row, 1.0, 1e-6).empty());
  row.V = 1.0 + 1e-5;
  const auto v = monitor_step(row, 1.0, 1e-6);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].channel, ViolationChannel::lyapunov);
}

TEST(ClosedLoop, PackUnpackRoundTrip) {
  ClosedLoop loop(bundled(ControllerKind::proposed, 1.0));
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(loop.size(), -1.0, 2.0);
  const auto [s, cs] = loop.unpack(x);
  EXPECT_EQ(loop.pack(s, cs), x);
  EXPECT_EQ(loop.size(), 3 * 2 + 3 + 2 * 4);
}

TEST(ClosedLoop, InitialAdaptiveStateMatchesInverseInertia) {
  const RunSetup setup = bundled(ControllerKind::proposed, 1.0);
  ClosedLoop loop(setup);
  const auto [s, cs] = loop.unpack(loop.initial_state());
  EXPECT_LT((cs.Kd - setup.plant->inertia(s).inverse()).norm(), 1e-12);
  EXPECT_EQ(cs.K2.norm(), 0.0);
  EXPECT_EQ(cs.r1.norm(), 0.0);
  EXPECT_LT((s.q - setup.reference->sample(0).q - setup.initial.e0).norm(), 1e-15);
}

TEST(ClosedLoop, FreeStepFunctionMatchesMember) {
  const RunSetup setup = bundled(ControllerKind::proposed, 1.0);
  ClosedLoop loop(setup);
  const Eigen::VectorXd x0 = loop.initial_state();
  const auto [s, cs] = loop.unpack(x0);
  const auto [s1, cs1] = step(loop, s, cs, 0.0, 1e-3);
  EXPECT_EQ(loop.pack(s1, cs1), loop.step(0.0, x0, 1e-3));
}

TEST(ClosedLoop, EventLocationSplitsSaturationExit) {
  const RunSetup setup = bundled(ControllerKind::proposed, 1.0);
  ClosedLoop loop(setup);
  Eigen::VectorXd x = loop.initial_state();
  ASSERT_NE(loop.pattern_at(0.0, x), (SaturationPattern{0, 0}));
  int total = 0;
  for (int k = 0; k < 100; ++k) {
    int ev = 0;
    x = loop.step(k * 1e-3, x, 1e-3, &ev);
    total += ev;
  }
  EXPECT_GE(total, 1);
  EXPECT_EQ(loop.pattern_at(0.1, x), (SaturationPattern{0, 0}));
}

TEST(Run, EmptyHorizonLogsOnlyInitialRow) {
  const RunResult r = run(bundled(ControllerKind::proposed, 0.0));
  EXPECT_EQ(r.outcome.status, RunStatus::completed);
  ASSERT_EQ(r.log.rows.size(), 1u);
  EXPECT_EQ(r.log.rows[0].t, 0.0);
}

TEST(Run, Deterministic) {
  const RunResult a = run(bundled(ControllerKind::proposed, 2.0));
  const RunResult b = run(bundled(ControllerKind::proposed, 2.0));
  ASSERT_EQ(a.log.rows.size(), b.log.rows.size());
  for (std::size_t i = 0; i < a.log.rows.size(); ++i) {
    ASSERT_EQ(a.log.rows[i].q, b.log.rows[i].q);
    ASSERT_EQ(a.log.rows[i].theta_hat, b.log.rows[i].theta_hat);
    ASSERT_EQ(a.log.rows[i].V, b.log.rows[i].V);
  }
}

TEST(Run, RecordStrideKeepsFinalRow) {
  RunSetup setup = bundled(ControllerKind::proposed, 1.0);
  setup.sim.record_stride = 300;
  const RunResult r = run(setup);
  ASSERT_EQ(r.log.rows.size(), 5u);
  EXPECT_NEAR(r.log.rows.back().t, 1.0, 1e-12);
}

TEST(Run, ZeroErrorEquilibriumFollowsReference) {
  RunSetup setup = bundled(ControllerKind::proposed, 5.0);
  setup.initial.e0.setZero();
  setup.initial.edot0.setZero();
  setup.initial.theta_hat0 = setup.plant->true_parameters();
  const RunResult r = run(setup);
  ASSERT_EQ(r.outcome.status, RunStatus::completed);
  EXPECT_LT(r.outcome.peak_e_norm, 1e-10);
  for (const LogRow& row : r.log.rows) {
    ASSERT_LT((row.theta_hat - setup.plant->true_parameters()).norm(), 1e-9);
  }
}

TEST(Run, EulerAndRk4AgreeToFirstOrder) {
  auto diff = [](double dt) {
    RunSetup rk = pendulum_setup(dt, 1.0);
    RunSetup eu = rk;
    eu.sim.integrator = IntegratorKind::euler;
    return (final_state(rk) - final_state(eu)).norm();
  };
  const double d1 = diff(2e-4), d2 = diff(1e-4);
  EXPECT_LT(d1, 1e-2);
  EXPECT_NEAR(d1 / d2, 2.0, 0.2);
}

TEST(Run, Rk4SelfConvergenceOnSmoothRun) {
  const Eigen::VectorXd a = final_state(pendulum_setup(4e-3, 3.0));
  const Eigen::VectorXd b = final_state(pendulum_setup(2e-3, 3.0));
  const Eigen::VectorXd c = final_state(pendulum_setup(1e-3, 3.0));
  const double ratio = (a - b).norm() / (b - c).norm();
  EXPECT_GT(ratio, 14.0);
  EXPECT_LT(ratio, 18.0);
}

TEST(Run, HugeInputLimitLeavesInputMachineryQuiescent) {
  RunSetup setup = bundled(ControllerKind::proposed, 3.0);
  setup.constraints.tau_max = 1e300;
  ClosedLoop loop(setup);
  Eigen::VectorXd x = loop.initial_state();
  const auto [s0, cs0] = loop.unpack(x);
  for (int k = 0; k < 3000; ++k) x = loop.step(k * 1e-3, x, 1e-3);
  const auto [s, cs] = loop.unpack(x);
  EXPECT_EQ(cs.Kd, cs0.Kd);
  EXPECT_EQ(cs.K2, cs0.K2);
  EXPECT_EQ(cs.r1, cs0.r1);
  for (const LogRow& row : run(setup).log.rows) ASSERT_EQ(row.dtau_norm, 0.0);
}

TEST(Run, ArmsCoincideWithoutSaturationAndAdaptation) {
  Scenario sc = bundled_scenario();
  sc.sim.t_end = 5.0;
  sc.constraints.tau_max = 1e300;
  sc.Gamma = 1e-12 * Eigen::MatrixXd::Identity(3, 3);
  sc.Gamma_c = sc.Gamma;
  const RunResult p = run(make_setup(sc, ControllerKind::proposed));
  const RunResult c = run(make_setup(sc, ControllerKind::classical));
  ASSERT_EQ(p.log.rows.size(), c.log.rows.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < p.log.rows.size(); ++i) {
    worst = std::max(worst, (p.log.rows[i].q - c.log.rows[i].q).norm());
    worst = std::max(worst, (p.log.rows[i].qdot - c.log.rows[i].qdot).norm());
    worst = std::max(worst, (p.log.rows[i].tau - c.log.rows[i].tau).norm());
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Run, ExtendedRateMatchesFiniteDifferences) {
  // The logged exact rate includes the Kd consistency term; it must agree with
  // centered differences of V even while the input saturates.
  const RunResult r = run(bundled(ControllerKind::proposed, 3.0));
  ASSERT_EQ(r.outcome.status, RunStatus::completed);
  const auto& rows = r.log.rows;
  const double dt = rows[1].t - rows[0].t;
  int checked = 0;
  for (std::size_t k = 1; k + 1 < rows.size(); ++k) {
    const bool kink = (rows[k - 1].dtau_norm > 0) != (rows[k + 1].dtau_norm > 0);
    if (kink || std::abs(rows[k].Vdot_exact) <= 1e-6) continue;
    const double fd = (rows[k + 1].V - rows[k - 1].V) / (2 * dt);
    ASSERT_LT(std::abs(fd - rows[k].Vdot_exact), 0.05 * std::abs(rows[k].Vdot_exact)) << "t=" << rows[k].t;
    ++checked;
  }
  EXPECT_GT(checked, 1000);
}

TEST(Run, ProposedBundledScenarioStaysInside) {
  const RunResult r = run(bundled(ControllerKind::proposed, 30.0));
  EXPECT_EQ(r.outcome.status, RunStatus::completed) << r.outcome.message;
  EXPECT_LT(r.outcome.peak_r_norm, 0.5625);
  EXPECT_LE(r.outcome.peak_tau_norm, 5.0 + 1e-9);
  EXPECT_TRUE(r.outcome.lyapunov_monotone);
}

TEST(Run, ClassicalBundledScenarioViolatesInputAtStart) {
  const RunResult r = run(bundled(ControllerKind::classical, 30.0));
  EXPECT_EQ(r.outcome.status, RunStatus::constraint_violation);
  ASSERT_TRUE(r.outcome.first_violation.has_value());
  EXPECT_EQ(r.outcome.first_violation->channel, ViolationChannel::input);
  EXPECT_EQ(r.outcome.first_violation->t, 0.0);
  EXPECT_FALSE(r.outcome.lyapunov_checked);
  EXPECT_TRUE(std::isnan(r.log.rows[0].V));
}

TEST(Run, StarvedInputEndsInBarrierBreach) {
  RunSetup setup = bundled(ControllerKind::proposed, 30.0);
  setup.constraints.tau_max = 0.05;
  setup.initial.e0 = Eigen::Vector2d(0.0, 0.0);
  setup.initial.edot0 = Eigen::Vector2d(0.5, 0.0);
  const RunResult r = run(setup);
  EXPECT_EQ(r.outcome.status, RunStatus::barrier_breach) << r.outcome.message;
  EXPECT_NE(r.outcome.message.find("barrier breach"), std::string::npos);
  EXPECT_LT(r.outcome.t_final, 30.0);
}

TEST(Run, NonFiniteSignalIsNumericFailure) {
  RunSetup setup = bundled(ControllerKind::proposed, 1.0);
  setup.reference = std::make_shared<NanAfter>(0.5);
  setup.initial.e0.setZero();
  const RunResult r = run(setup);
  EXPECT_EQ(r.outcome.status, RunStatus::numeric_failure);
  EXPECT_NE(r.outcome.message.find("non-finite"), std::string::npos) << r.outcome.message;
  EXPECT_LT(r.outcome.t_final, 0.5);
}

TEST(Run, InadmissibleSetupIsConfigError) {
  RunSetup setup = bundled(ControllerKind::proposed, 1.0);
  setup.initial.e0 = Eigen::Vector2d(0.6, 0.0);
  EXPECT_THROW(run(setup), ConfigError);

  setup = bundled(ControllerKind::proposed, 1.0);
  setup.proposed.alpha = 0.7;
  EXPECT_THROW(run(setup), ConfigError);

  setup = bundled(ControllerKind::proposed, 1.0);
  setup.proposed.kappa = 0.5;
  EXPECT_THROW(run(setup), ConfigError);

  setup = bundled(ControllerKind::proposed, 1.0);
  setup.sim.dt = 0.0;
  EXPECT_THROW(run(setup), ConfigError);
}
