#include "safetrack/scenario.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "safetrack/errors.hpp"

namespace safetrack {

using json = nlohmann::ordered_json;

std::string_view to_string(ControllerMode mode) {
  switch (mode) {
    case ControllerMode::proposed: return "proposed";
    case ControllerMode::classical: return "classical";
    case ControllerMode::both: return "both";
  }
  return "unknown";
}

ControllerMode parse_controller_mode(std::string_view s) {
  if (s == "proposed") return ControllerMode::proposed;
  if (s == "classical") return ControllerMode::classical;
  if (s == "both") return ControllerMode::both;
  throw ConfigError("controller mode must be proposed, classical or both (got '" + std::string(s) + "')");
}

namespace {

// Field access with the dotted path in every error message.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "must be an object");
  }

  [[noreturn]] void fail(std::string_view key, std::string_view why) const {
    std::string field = path_;
    if (!key.empty()) field += (field.empty() ? "" : ".") + std::string(key);
    throw ConfigError("field '" + field + "': " + std::string(why));
  }

  void only(std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, _] : j_.items()) {
      bool known = false;
      for (auto allowed : keys) known = known || k == allowed;
      if (!known) fail(k, "unknown key");
    }
  }

  bool has(std::string_view key) const { return j_.contains(key); }

  Reader object(std::string_view key) const {
    return Reader(require(key), path_.empty() ? std::string(key) : path_ + "." + std::string(key));
  }

  double number(std::string_view key) const {
    const json& v = require(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }

  std::string string(std::string_view key) const {
    const json& v = require(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  long integer(std::string_view key) const {
    const json& v = require(key);
    if (!v.is_number_integer()) fail(key, "must be an integer");
    return v.get<long>();
  }

  Eigen::VectorXd vector(std::string_view key) const {
    const json& v = require(key);
    if (!v.is_array() || v.empty()) fail(key, "must be a non-empty array of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(key, "must be a non-empty array of numbers");
      out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    if (!out.allFinite()) fail(key, "entries must be finite");
    return out;
  }

  /// A scalar c means c * I; otherwise a square nested array.
  Eigen::MatrixXd gain(std::string_view key, Eigen::Index size) const {
    const json& v = require(key);
    if (v.is_number()) {
      const double c = v.get<double>();
      if (!std::isfinite(c)) fail(key, "must be finite");
      return c * Eigen::MatrixXd::Identity(size, size);
    }
    if (!v.is_array() || v.size() != static_cast<std::size_t>(size)) {
      fail(key, "must be a number or a " + std::to_string(size) + "x" + std::to_string(size) + " matrix");
    }
    Eigen::MatrixXd out(size, size);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_array() || v[i].size() != static_cast<std::size_t>(size)) {
        fail(key, "must be a number or a square matrix");
      }
      for (std::size_t k = 0; k < v[i].size(); ++k) {
        if (!v[i][k].is_number()) fail(key, "matrix entries must be numbers");
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v[i][k].get<double>();
      }
    }
    if (!out.allFinite()) fail(key, "entries must be finite");
    return out;
  }

 private:
  const json& require(std::string_view key) const {
    auto it = j_.find(key);
    if (it == j_.end()) fail(key, "is required");
    return *it;
  }

  const json& j_;
  std::string path_;
};

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json gain_to_json(const Eigen::MatrixXd& A) {
  const double c = A(0, 0);
  if (A == c * Eigen::MatrixXd::Identity(A.rows(), A.cols())) return c;
  json rows = json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) rows.push_back(to_json(Eigen::VectorXd(A.row(i).transpose())));
  return rows;
}

[[noreturn]] void invalid(std::string_view field, const std::string& why) {
  throw ConfigError("field '" + std::string(field) + "': " + why);
}

Eigen::Index model_dof(const std::string& model) {
  if (model == "two_link") return 2;
  invalid("plant.model", "unknown plant '" + model + "' (registered: two_link)");
}

Eigen::Index model_params(const std::string& model) {
  if (model == "two_link") return 3;
  invalid("plant.model", "unknown plant '" + model + "' (registered: two_link)");
}

}  // namespace

Scenario parse_scenario(std::string_view text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(source) + ": parse error: " + e.what());
  }

  try {
    Reader root(doc, "");
    root.only({"name", "plant", "constraints", "reference", "controller", "initial", "sim"});
    Scenario s;
    s.name = root.string("name");

    const Reader plant = root.object("plant");
    s.plant_model = plant.string("model");
    const Eigen::Index n = model_dof(s.plant_model);
    const Eigen::Index m = model_params(s.plant_model);
    plant.only({"model", "p1", "p2", "p3", "fd1", "fd2"});
    s.two_link = TwoLinkParams{plant.number("p1"), plant.number("p2"), plant.number("p3"),
                               plant.number("fd1"), plant.number("fd2")};

    const Reader cons = root.object("constraints");
    cons.only({"beta1", "beta2", "tau_max", "alpha1", "alpha2"});
    s.constraints = ConstraintSpec{cons.number("beta1"), cons.number("beta2"), cons.number("tau_max"),
                                   cons.number("alpha1"), cons.number("alpha2")};

    const Reader ref = root.object("reference");
    s.reference.type = ref.string("type");
    if (s.reference.type != "sinusoid") {
      ref.fail("type", "unknown reference '" + s.reference.type + "' (registered: sinusoid)");
    }
    ref.only({"type", "sin_amplitude", "cos_amplitude", "frequency", "offset"});
    s.reference.sin_amplitude = ref.vector("sin_amplitude");
    s.reference.cos_amplitude = ref.vector("cos_amplitude");
    s.reference.frequency = ref.vector("frequency");
    s.reference.offset = ref.vector("offset");

    const Reader ctl = root.object("controller");
    ctl.only({"mode", "alpha", "K1", "Gamma", "Gamma_d", "Gamma_2", "Gamma_c"});
    s.mode = parse_controller_mode(ctl.string("mode"));
    s.alpha = ctl.number("alpha");
    s.K1 = ctl.gain("K1", n);
    if (s.has_proposed()) {
      s.Gamma = ctl.gain("Gamma", m);
      s.Gamma_d = ctl.gain("Gamma_d", n);
      s.Gamma_2 = ctl.gain("Gamma_2", n);
    }
    if (s.has_classical()) s.Gamma_c = ctl.gain("Gamma_c", m);

    const Reader init = root.object("initial");
    init.only({"e0", "edot0", "theta_hat0"});
    s.initial.e0 = init.vector("e0");
    s.initial.edot0 = init.vector("edot0");
    if (init.has("theta_hat0")) s.initial.theta_hat0 = init.vector("theta_hat0");

    if (root.has("sim")) {
      const Reader sim = root.object("sim");
      sim.only({"dt", "t_end", "integrator", "record_stride"});
      if (sim.has("dt")) s.sim.dt = sim.number("dt");
      if (sim.has("t_end")) s.sim.t_end = sim.number("t_end");
      if (sim.has("integrator")) {
        const std::string integ = sim.string("integrator");
        if (integ == "rk4") {
          s.sim.integrator = IntegratorKind::rk4;
        } else if (integ == "euler") {
          s.sim.integrator = IntegratorKind::euler;
        } else {
          sim.fail("integrator", "must be rk4 or euler");
        }
      }
      if (sim.has("record_stride")) s.sim.record_stride = static_cast<int>(sim.integer("record_stride"));
    }

    validate_scenario(s);
    return s;
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
}

void validate_scenario(const Scenario& s) {
  if (s.name.empty()) invalid("name", "must not be empty");
  const Eigen::Index n = model_dof(s.plant_model);
  const Eigen::Index m = model_params(s.plant_model);
  try {
    s.two_link.validate();
  } catch (const ConfigError& e) {
    invalid("plant", e.what());
  }
  try {
    s.constraints.validate();
  } catch (const ConfigError& e) {
    invalid("constraints", e.what());
  }

  const auto& r = s.reference;
  for (const auto& [field, v] : {std::pair{"reference.sin_amplitude", &r.sin_amplitude},
                                 std::pair{"reference.cos_amplitude", &r.cos_amplitude},
                                 std::pair{"reference.frequency", &r.frequency},
                                 std::pair{"reference.offset", &r.offset}}) {
    if (v->size() != n) invalid(field, "must have " + std::to_string(n) + " entries");
  }

  if (!(s.alpha > 0.0)) invalid("controller.alpha", "must be positive");
  if (!(s.alpha < kMaxFilterGain)) {
    invalid("controller.alpha", "gain condition requires 0 < alpha < (sqrt(5) - 1)/2 ~ 0.618, got " +
                                    std::to_string(s.alpha));
  }

  if (s.initial.e0.size() != n) invalid("initial.e0", "must have " + std::to_string(n) + " entries");
  if (s.initial.edot0.size() != n) invalid("initial.edot0", "must have " + std::to_string(n) + " entries");
  if (s.initial.theta_hat0 && s.initial.theta_hat0->size() != m) {
    invalid("initial.theta_hat0", "must have " + std::to_string(m) + " entries");
  }

  try {
    s.sim.validate();
  } catch (const ConfigError& e) {
    invalid("sim", e.what());
  }

  const FeasibilityReport report = derive_error_bounds(s.constraints, s.alpha);
  if (s.has_proposed()) {
    ControllerGains g{s.K1, s.Gamma, s.Gamma_d, s.Gamma_2, s.alpha, report.kappa};
    try {
      g.validate(n, m);
    } catch (const ConfigError& e) {
      invalid("controller", e.what());
    }
    const InitialConditionCheck ic = check_initial_conditions(s.initial.e0, s.initial.edot0, report);
    if (!ic.pass) {
      std::string why = "initial tracking error must satisfy";
      for (const auto& f : ic.failures) why += " " + f + ";";
      invalid("initial", why);
    }
  }
  if (s.has_classical()) {
    ClassicalGains g{s.K1, s.Gamma_c, s.alpha};
    try {
      g.validate(n, m);
    } catch (const ConfigError& e) {
      invalid("controller", e.what());
    }
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file '" + path.string() + "': " + std::strerror(errno));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string serialize_scenario(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["plant"] = {{"model", s.plant_model},  {"p1", s.two_link.p1},   {"p2", s.two_link.p2},
                {"p3", s.two_link.p3},     {"fd1", s.two_link.fd1}, {"fd2", s.two_link.fd2}};
  j["constraints"] = {{"beta1", s.constraints.beta1},   {"beta2", s.constraints.beta2},
                      {"tau_max", s.constraints.tau_max}, {"alpha1", s.constraints.alpha1},
                      {"alpha2", s.constraints.alpha2}};
  j["reference"] = {{"type", s.reference.type},
                    {"sin_amplitude", to_json(s.reference.sin_amplitude)},
                    {"cos_amplitude", to_json(s.reference.cos_amplitude)},
                    {"frequency", to_json(s.reference.frequency)},
                    {"offset", to_json(s.reference.offset)}};
  json ctl;
  ctl["mode"] = std::string(to_string(s.mode));
  ctl["alpha"] = s.alpha;
  ctl["K1"] = gain_to_json(s.K1);
  if (s.has_proposed()) {
    ctl["Gamma"] = gain_to_json(s.Gamma);
    ctl["Gamma_d"] = gain_to_json(s.Gamma_d);
    ctl["Gamma_2"] = gain_to_json(s.Gamma_2);
  }
  if (s.has_classical()) ctl["Gamma_c"] = gain_to_json(s.Gamma_c);
  j["controller"] = ctl;
  json init;
  init["e0"] = to_json(s.initial.e0);
  init["edot0"] = to_json(s.initial.edot0);
  if (s.initial.theta_hat0) init["theta_hat0"] = to_json(*s.initial.theta_hat0);
  j["initial"] = init;
  j["sim"] = {{"dt", s.sim.dt},
              {"t_end", s.sim.t_end},
              {"integrator", std::string(to_string(s.sim.integrator))},
              {"record_stride", s.sim.record_stride}};
  return j.dump(2) + "\n";
}

std::shared_ptr<const Plant> make_plant(const Scenario& s) {
  if (s.plant_model == "two_link") return std::make_shared<const TwoLinkArm>(s.two_link);
  invalid("plant.model", "unknown plant '" + s.plant_model + "'");
}

std::shared_ptr<const ReferenceTrajectory> make_reference(const Scenario& s) {
  if (s.reference.type == "sinusoid") {
    return std::make_shared<const SinusoidReference>(s.reference.sin_amplitude, s.reference.cos_amplitude,
                                                     s.reference.frequency, s.reference.offset);
  }
  invalid("reference.type", "unknown reference '" + s.reference.type + "'");
}

RunSetup make_setup(const Scenario& s, ControllerKind kind) {
  if (kind == ControllerKind::proposed && !s.has_proposed()) {
    throw ConfigError("scenario '" + s.name + "' has no proposed controller configured");
  }
  if (kind == ControllerKind::classical && !s.has_classical()) {
    throw ConfigError("scenario '" + s.name + "' has no classical controller configured");
  }
  RunSetup setup;
  setup.plant = make_plant(s);
  setup.reference = make_reference(s);
  setup.constraints = s.constraints;
  setup.kind = kind;
  const FeasibilityReport report = derive_error_bounds(s.constraints, s.alpha);
  if (s.has_proposed()) {
    setup.proposed = ControllerGains{s.K1, s.Gamma, s.Gamma_d, s.Gamma_2, s.alpha, report.kappa};
  }
  // The baseline shares K1 and alpha with the constrained controller.
  if (s.has_classical()) setup.classical = ClassicalGains{s.K1, s.Gamma_c, s.alpha};
  setup.initial = s.initial;
  setup.sim = s.sim;
  return setup;
}

ScenarioReport run_scenario(const Scenario& s) {
  ScenarioReport report;
  report.scenario = s.name;
  report.mode = s.mode;
  std::optional<std::future<RunResult>> classical;
  if (s.has_classical()) {
    RunSetup setup = make_setup(s, ControllerKind::classical);
    classical = std::async(std::launch::async, [setup = std::move(setup)] { return run(setup); });
  }
  if (s.has_proposed()) report.proposed = run(make_setup(s, ControllerKind::proposed));
  if (classical) report.classical = classical->get();
  return report;
}

ScenarioReport run_compare(const Scenario& s) {
  if (s.mode != ControllerMode::both) {
    throw ConfigError("compare needs controller mode 'both' (scenario '" + s.name + "' has '" +
                      std::string(to_string(s.mode)) + "')");
  }
  return run_scenario(s);
}

int exit_code_for(const RunOutcome& outcome) {
  switch (outcome.status) {
    case RunStatus::completed: return kExitOk;
    case RunStatus::constraint_violation: return kExitConstraintViolation;
    case RunStatus::barrier_breach: return kExitBarrierBreach;
    case RunStatus::numeric_failure: return kExitNumericFailure;
  }
  return kExitNumericFailure;
}

int exit_code_for(const ScenarioReport& report) {
  if (report.proposed) return exit_code_for(report.proposed->outcome);
  if (report.classical) return exit_code_for(report.classical->outcome);
  return kExitConfigError;
}

}  // namespace safetrack
