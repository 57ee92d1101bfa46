#include "safetrack/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "safetrack/errors.hpp"
#include "safetrack/lyapunov.hpp"

namespace safetrack {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Bisection stops once the switching instant is bracketed to this fraction of dt.
constexpr double kEventTolerance = 1e-14;
// A step that keeps switching past this many events is finished with per-stage clamping.
constexpr int kMaxEventsPerStep = 16;

std::string format_time(double t) {
  std::ostringstream os;
  os.precision(10);
  os << t;
  return os.str();
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim.dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("sim.t_end must be non-negative");
  if (record_stride < 1) throw ConfigError("sim.record_stride must be >= 1");
}

long SimConfig::steps() const { return static_cast<long>(std::llround(t_end / dt)); }

std::string_view to_string(ControllerKind kind) {
  return kind == ControllerKind::proposed ? "proposed" : "classical";
}

std::string_view to_string(IntegratorKind kind) {
  return kind == IntegratorKind::rk4 ? "rk4" : "euler";
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::completed: return "completed";
    case RunStatus::constraint_violation: return "constraint_violation";
    case RunStatus::barrier_breach: return "barrier_breach";
    case RunStatus::numeric_failure: return "numeric_failure";
  }
  return "unknown";
}

std::string_view to_string(ViolationChannel channel) {
  switch (channel) {
    case ViolationChannel::position: return "position";
    case ViolationChannel::velocity: return "velocity";
    case ViolationChannel::input: return "input";
    case ViolationChannel::lyapunov: return "lyapunov";
  }
  return "unknown";
}

std::vector<Violation> monitor_step(const LogRow& row, std::optional<double> previous_V,
                                    double tol_V) {
  std::vector<Violation> out;
  const auto& m = row.margins;
  if (m.position_violated()) out.push_back({row.t, ViolationChannel::position, m.position});
  if (m.velocity_violated()) out.push_back({row.t, ViolationChannel::velocity, m.velocity});
  if (m.input_violated()) out.push_back({row.t, ViolationChannel::input, m.input});
  if (previous_V && std::isfinite(row.V)) {
    const double increase = row.V - *previous_V;
    if (increase > tol_V) out.push_back({row.t, ViolationChannel::lyapunov, increase});
  }
  return out;
}

// ---------------------------------------------------------------------------
// ClosedLoop

ClosedLoop::ClosedLoop(const RunSetup& setup) : setup_(setup) {
  if (!setup_.plant || !setup_.reference) throw ConfigError("run setup needs a plant and a reference");
  n_ = setup_.plant->dof();
  m_ = setup_.plant->num_parameters();
  if (setup_.reference->dof() != n_) throw ConfigError("reference and plant dimensions differ");
  if (setup_.initial.e0.size() != n_ || setup_.initial.edot0.size() != n_) {
    throw ConfigError("initial.e0 / initial.edot0 must have one entry per joint");
  }
  if (setup_.initial.theta_hat0 && setup_.initial.theta_hat0->size() != m_) {
    throw ConfigError("initial.theta_hat0 must have one entry per unknown parameter");
  }
}

Eigen::VectorXd ClosedLoop::pack(const PlantState& s, const ControllerState& cs) const {
  Eigen::VectorXd x(size());
  Eigen::Index o = 0;
  x.segment(o, n_) = s.q;
  o += n_;
  x.segment(o, n_) = s.qdot;
  o += n_;
  x.segment(o, m_) = cs.theta_hat;
  o += m_;
  x.segment(o, n_ * n_) = cs.Kd.reshaped();
  o += n_ * n_;
  x.segment(o, n_ * n_) = cs.K2.reshaped();
  o += n_ * n_;
  x.segment(o, n_) = cs.r1;
  return x;
}

std::pair<PlantState, ControllerState> ClosedLoop::unpack(const Eigen::VectorXd& x) const {
  if (x.size() != size()) throw InvalidInput("augmented state has the wrong size");
  PlantState s;
  ControllerState cs;
  Eigen::Index o = 0;
  s.q = x.segment(o, n_);
  o += n_;
  s.qdot = x.segment(o, n_);
  o += n_;
  cs.theta_hat = x.segment(o, m_);
  o += m_;
  cs.Kd = x.segment(o, n_ * n_).reshaped(n_, n_);
  o += n_ * n_;
  cs.K2 = x.segment(o, n_ * n_).reshaped(n_, n_);
  o += n_ * n_;
  cs.r1 = x.segment(o, n_);
  return {std::move(s), std::move(cs)};
}

namespace {

const char* block_name(Eigen::Index i, Eigen::Index n, Eigen::Index m) {
  if (i < n) return "q";
  if (i < 2 * n) return "qdot";
  if (i < 2 * n + m) return "theta_hat";
  if (i < 2 * n + m + n * n) return "Kd";
  if (i < 2 * n + m + 2 * n * n) return "K2";
  return "r1";
}

void require_finite_state(const Eigen::VectorXd& x, double t, Eigen::Index n, Eigen::Index m,
                          const char* what) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x(i))) {
      throw NumericFailure(std::string("non-finite ") + what + " in block " + block_name(i, n, m) +
                           " at t=" + format_time(t));
    }
  }
}

}  // namespace

SaturationPattern ClosedLoop::pattern_at(double t, const Eigen::VectorXd& x) const {
  if (setup_.kind != ControllerKind::proposed) return {};
  const auto [s, cs] = unpack(x);
  const ReferenceSample ref = setup_.reference->sample(t);
  const ControlOutput out = proposed_control(cs, s, ref, setup_.proposed, *setup_.plant,
                                             setup_.constraints.tau_max);
  return saturation_pattern(out.v, setup_.constraints.tau_max);
}

Eigen::VectorXd ClosedLoop::derivative(double t, const Eigen::VectorXd& x,
                                       const SaturationPattern* pattern) const {
  require_finite_state(x, t, n_, m_, "stage state");
  const auto [s, cs] = unpack(x);
  const ReferenceSample ref = setup_.reference->sample(t);
  const Plant& plant = *setup_.plant;

  Eigen::VectorXd dx = Eigen::VectorXd::Zero(size());
  dx.segment(0, n_) = s.qdot;
  if (setup_.kind == ControllerKind::proposed) {
    const ControlOutput out = proposed_control(cs, s, ref, setup_.proposed, plant,
                                               setup_.constraints.tau_max, pattern);
    require_finite_state(out.tau, t, n_, m_, "control input");
    const AdaptationRates a = proposed_step_derivatives(cs, out.diag.r, out.regression.Y,
                                                        out.delta_tau, setup_.proposed);
    ControllerState rates{a.theta_hat, a.Kd, a.K2, a.r1};
    PlantState plant_rate{s.qdot, plant.acceleration(s, out.tau)};
    dx = pack(plant_rate, rates);
  } else {
    const ClassicalOutput out = classical_control(cs.theta_hat, s, ref, setup_.classical, plant);
    require_finite_state(out.tau, t, n_, m_, "control input");
    dx.segment(n_, n_) = plant.acceleration(s, out.tau);
    dx.segment(2 * n_, m_) = out.theta_hat_dot;
  }
  require_finite_state(dx, t, n_, m_, "derivative");
  return dx;
}

Eigen::VectorXd ClosedLoop::advance(double t, const Eigen::VectorXd& x, double h,
                                    const SaturationPattern* pattern) const {
  if (setup_.sim.integrator == IntegratorKind::euler) {
    return x + h * derivative(t, x, pattern);
  }
  const Eigen::VectorXd k1 = derivative(t, x, pattern);
  const Eigen::VectorXd k2 = derivative(t + 0.5 * h, x + 0.5 * h * k1, pattern);
  const Eigen::VectorXd k3 = derivative(t + 0.5 * h, x + 0.5 * h * k2, pattern);
  const Eigen::VectorXd k4 = derivative(t + h, x + h * k3, pattern);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::VectorXd ClosedLoop::step(double t, const Eigen::VectorXd& x, double dt, int* events) const {
  if (events) *events = 0;
  if (setup_.kind != ControllerKind::proposed) return advance(t, x, dt, nullptr);

  Eigen::VectorXd xc = x;
  double done = 0.0;
  int located = 0;
  while (true) {
    const double tc = t + done;
    const double rem = dt - done;
    if (located >= kMaxEventsPerStep) {
      if (events) *events = located;
      return advance(tc, xc, rem, nullptr);
    }
    const SaturationPattern pattern = pattern_at(tc, xc);
    Eigen::VectorXd xn = advance(tc, xc, rem, &pattern);
    if (pattern_at(tc + rem, xn) == pattern) {
      if (events) *events = located;
      return xn;
    }
    // Bracket the first instant at which the clamp rule leaves `pattern`.
    double lo = 0.0;
    double hi = rem;
    while (hi - lo > kEventTolerance * dt) {
      const double mid = 0.5 * (lo + hi);
      Eigen::VectorXd xm = advance(tc, xc, mid, &pattern);
      if (pattern_at(tc + mid, xm) != pattern) {
        hi = mid;
        xn = std::move(xm);
      } else {
        lo = mid;
      }
    }
    xc = std::move(xn);
    done += hi;
    ++located;
    if (!(done < dt)) {
      if (events) *events = located;
      return xc;
    }
  }
}

LogRow ClosedLoop::observe(double t, const Eigen::VectorXd& x) const {
  require_finite_state(x, t, n_, m_, "state");
  const auto [s, cs] = unpack(x);
  const ReferenceSample ref = setup_.reference->sample(t);
  const Plant& plant = *setup_.plant;

  LogRow row;
  row.t = t;
  row.q = s.q;
  row.qdot = s.qdot;
  row.q_d = ref.q;
  row.qdot_d = ref.qdot;
  row.theta_hat = cs.theta_hat;

  if (setup_.kind == ControllerKind::proposed) {
    const ControllerGains& g = setup_.proposed;
    const ControlOutput out = proposed_control(cs, s, ref, g, plant, setup_.constraints.tau_max);
    row.e = out.diag.e;
    row.edot = out.diag.edot;
    row.r = out.diag.r;
    row.tau = out.tau;
    row.delta_tau = out.delta_tau;
    const Eigen::VectorXd theta_tilde = plant.true_parameters() - cs.theta_hat;
    row.V = lyapunov_value(out.diag.r, out.diag.r_d, theta_tilde, cs.Kd, cs.K2, g);
    row.Vdot_analytic = lyapunov_rate_analytic(out.diag.r, out.diag.r_d, g.K1, g.kappa);
    row.Vdot_exact = row.Vdot_analytic + kd_consistency_defect_rate(out.diag.r, out.diag.r_d, out.M,
                                                                    cs.Kd, cs.K2, out.delta_tau,
                                                                    g.kappa);
  } else {
    const ClassicalOutput out = classical_control(cs.theta_hat, s, ref, setup_.classical, plant);
    row.e = out.diag.e;
    row.edot = out.diag.edot;
    row.r = out.diag.r;
    row.tau = out.tau;
    row.delta_tau = Eigen::VectorXd::Zero(n_);
    row.V = kNaN;
    row.Vdot_analytic = kNaN;
    row.Vdot_exact = kNaN;
  }
  row.e_norm = row.e.norm();
  row.edot_norm = row.edot.norm();
  row.r_norm = row.r.norm();
  row.tau_norm = row.tau.norm();
  row.dtau_norm = row.delta_tau.norm();
  row.margins = constraint_margins(s, row.tau, setup_.constraints);
  return row;
}

Eigen::VectorXd ClosedLoop::initial_state() const {
  const ReferenceSample ref = setup_.reference->sample(0.0);
  PlantState s{ref.q + setup_.initial.e0, ref.qdot + setup_.initial.edot0};
  s.validate(n_);
  ControllerState cs = ControllerState::zeros(n_, m_);
  if (setup_.initial.theta_hat0) cs.theta_hat = *setup_.initial.theta_hat0;
  if (setup_.kind == ControllerKind::proposed) {
    // Kd = g - K2 holds at t = 0 only; afterwards both follow their own laws.
    cs.Kd = solve_spd(setup_.plant->inertia(s), Eigen::MatrixXd(Eigen::MatrixXd::Identity(n_, n_))) - cs.K2;
  }
  cs.validate(n_, m_);
  return pack(s, cs);
}

std::pair<PlantState, ControllerState> step(const ClosedLoop& loop, const PlantState& state,
                                            const ControllerState& cs, double t, double dt) {
  return loop.unpack(loop.step(t, loop.pack(state, cs), dt));
}

// ---------------------------------------------------------------------------
// run

FeasibilityReport feasibility_for(const RunSetup& setup) {
  const double alpha =
      setup.kind == ControllerKind::proposed ? setup.proposed.alpha : setup.classical.alpha;
  FeasibilityReport report = derive_error_bounds(setup.constraints, alpha);
  if (setup.reference) {
    attach_reference_bounds(report, setup.constraints,
                            measure_reference_bounds(*setup.reference, setup.sim.t_end, setup.sim.dt));
  }
  return report;
}

namespace {

void record(RunOutcome& o, const Violation& v) {
  if (!o.first_violation) o.first_violation = v;
  ChannelSummary* c = nullptr;
  switch (v.channel) {
    case ViolationChannel::position: c = &o.position; break;
    case ViolationChannel::velocity: c = &o.velocity; break;
    case ViolationChannel::input: c = &o.input; break;
    case ViolationChannel::lyapunov: c = &o.lyapunov; break;
  }
  if (!c->first_time) c->first_time = v.t;
  ++c->count;
}

}  // namespace

RunResult run(const RunSetup& setup) {
  setup.sim.validate();
  setup.constraints.validate();
  ClosedLoop loop(setup);

  RunResult result;
  result.kind = setup.kind;
  result.feasibility = feasibility_for(setup);
  result.initial_check =
      check_initial_conditions(setup.initial.e0, setup.initial.edot0, result.feasibility);
  result.feasibility.ic_ok = result.initial_check.pass;

  if (setup.kind == ControllerKind::proposed) {
    if (!result.feasibility.gain_ok) {
      throw ConfigError("alpha = " + std::to_string(setup.proposed.alpha) +
                        " violates the gain condition 0 < alpha < (sqrt(5) - 1)/2");
    }
    setup.proposed.validate(setup.plant->dof(), setup.plant->num_parameters());
    if (std::abs(setup.proposed.kappa - result.feasibility.kappa) >
        1e-12 * std::max(1.0, result.feasibility.kappa)) {
      throw ConfigError("controller kappa does not match the derived barrier radius");
    }
    if (!result.initial_check.pass) {
      std::string msg = "initial conditions violate:";
      for (const auto& f : result.initial_check.failures) msg += " " + f + ";";
      throw ConfigError(msg);
    }
  } else {
    setup.classical.validate(setup.plant->dof(), setup.plant->num_parameters());
  }

  TrajectoryLog& log = result.log;
  log.dof = setup.plant->dof();
  log.num_parameters = setup.plant->num_parameters();
  RunOutcome& out = result.outcome;

  const long steps = setup.sim.steps();
  const double dt = setup.sim.dt;
  log.rows.reserve(static_cast<std::size_t>(steps / setup.sim.record_stride + 2));

  Eigen::VectorXd x = loop.initial_state();
  double tol_V = 0.0;
  std::optional<double> previous_V;
  double t = 0.0;
  try {
    for (long k = 0;; ++k) {
      t = static_cast<double>(k) * dt;
      if (k % setup.sim.record_stride == 0 || k == steps) {
        LogRow row = loop.observe(t, x);
        if (log.rows.empty() && std::isfinite(row.V)) {
          tol_V = lyapunov_tolerance(dt, std::max(1.0, std::abs(row.V)));
        }
        for (const Violation& v : monitor_step(row, previous_V, tol_V)) {
          record(out, v);
          if (v.channel == ViolationChannel::lyapunov) {
            out.max_lyapunov_increase = std::max(out.max_lyapunov_increase, v.value);
          }
        }
        if (previous_V && std::isfinite(row.V)) {
          out.max_lyapunov_increase = std::max(out.max_lyapunov_increase, row.V - *previous_V);
        }
        if (std::isfinite(row.V)) previous_V = row.V;
        log.rows.push_back(std::move(row));
      }
      if (k >= steps) break;
      x = loop.step(t, x, dt);
    }
  } catch (const BarrierBreach& e) {
    out.status = RunStatus::barrier_breach;
    out.message = std::string(e.what()) + " at t=" + format_time(t);
  } catch (const NumericFailure& e) {
    out.status = RunStatus::numeric_failure;
    out.message = e.what();
  } catch (const InvalidInput& e) {
    out.status = RunStatus::numeric_failure;
    out.message = e.what();
  }

  out.t_final = log.rows.empty() ? 0.0 : log.rows.back().t;
  for (const LogRow& row : log.rows) {
    out.peak_r_norm = std::max(out.peak_r_norm, row.r_norm);
    out.peak_tau_norm = std::max(out.peak_tau_norm, row.tau_norm);
    out.peak_q_norm = std::max(out.peak_q_norm, row.q.norm());
    out.peak_qdot_norm = std::max(out.peak_qdot_norm, row.qdot.norm());
    out.peak_e_norm = std::max(out.peak_e_norm, row.e_norm);
    out.peak_edot_norm = std::max(out.peak_edot_norm, row.edot_norm);
  }
  if (!log.rows.empty()) {
    out.final_e_norm = log.rows.back().e_norm;
    out.final_edot_norm = log.rows.back().edot_norm;
    out.final_r_norm = log.rows.back().r_norm;
  }
  out.lyapunov_checked = setup.kind == ControllerKind::proposed;
  out.lyapunov_tolerance = tol_V;
  out.lyapunov_monotone = out.lyapunov.count == 0;
  if (out.status == RunStatus::completed && out.first_violation) {
    out.status = RunStatus::constraint_violation;
  }
  return result;
}

}  // namespace safetrack
