#include "safetrack/report.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "safetrack/errors.hpp"

namespace safetrack {

using json = nlohmann::ordered_json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "': " + std::strerror(errno));
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed: " + std::strerror(errno));
}

void append_indexed(std::vector<std::string>& cols, const char* stem, Eigen::Index count) {
  for (Eigen::Index i = 1; i <= count; ++i) cols.push_back(stem + std::to_string(i));
}

json optional_time(const std::optional<double>& t) { return t ? json(*t) : json(nullptr); }

json channel_json(const ChannelSummary& c) {
  return {{"count", c.count}, {"first_time", optional_time(c.first_time)}};
}

json feasibility_json(const FeasibilityReport& f) {
  json j = {{"delta1", f.delta1}, {"delta2", f.delta2}, {"delta", f.delta},   {"kappa", f.kappa},
            {"alpha", f.alpha},   {"gain_ok", f.gain_ok}, {"ic_ok", f.ic_ok}};
  if (f.measured_reference) {
    j["measured_reference"] = {{"max_position_norm", f.measured_reference->max_position_norm},
                               {"max_velocity_norm", f.measured_reference->max_velocity_norm}};
  }
  j["warnings"] = f.warnings;
  return j;
}

}  // namespace

std::vector<std::string> csv_columns(Eigen::Index n, Eigen::Index m) {
  std::vector<std::string> cols{"t"};
  append_indexed(cols, "q", n);
  append_indexed(cols, "qd", n);
  append_indexed(cols, "qdot", n);
  cols.insert(cols.end(), {"e_norm", "edot_norm", "r_norm"});
  append_indexed(cols, "tau", n);
  cols.insert(cols.end(), {"tau_norm", "dtau_norm", "V", "Vdot_analytic", "margin_q", "margin_qdot",
                           "margin_tau"});
  append_indexed(cols, "theta_hat", m);
  return cols;
}

void write_csv(const TrajectoryLog& log, std::ostream& out) {
  const auto cols = csv_columns(log.dof, log.num_parameters);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  std::string line;
  for (const LogRow& r : log.rows) {
    line.clear();
    auto put = [&line](double v) {
      if (!line.empty()) line += ',';
      line += fmt17(v);
    };
    auto put_vec = [&put](const Eigen::VectorXd& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) put(v(i));
    };
    put(r.t);
    put_vec(r.q);
    put_vec(r.q_d);
    put_vec(r.qdot);
    put(r.e_norm);
    put(r.edot_norm);
    put(r.r_norm);
    put_vec(r.tau);
    put(r.tau_norm);
    put(r.dtau_norm);
    put(r.V);
    put(r.Vdot_analytic);
    put(r.margins.position);
    put(r.margins.velocity);
    put(r.margins.input);
    put_vec(r.theta_hat);
    out << line << '\n';
  }
}

void emit_csv(const TrajectoryLog& log, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  write_csv(log, out);
  finish(out, path);
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw InvalidInput("CSV has no column '" + std::string(name) + "'");
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty CSV");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.header.size());
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw InvalidInput("CSV cell is not a number: '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != table.header.size()) throw InvalidInput("CSV row width differs from header");
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "': " + std::strerror(errno));
  return read_csv(in);
}

json summary_json(const RunResult& result, std::string_view scenario) {
  const RunOutcome& o = result.outcome;
  json j;
  j["scenario"] = std::string(scenario);
  j["controller"] = std::string(to_string(result.kind));
  j["status"] = std::string(to_string(o.status));
  j["message"] = o.message;
  j["t_final"] = o.t_final;
  if (o.first_violation) {
    j["first_violation"] = {{"t", o.first_violation->t},
                            {"channel", std::string(to_string(o.first_violation->channel))},
                            {"value", o.first_violation->value}};
  } else {
    j["first_violation"] = nullptr;
  }
  j["violations"] = {{"position", channel_json(o.position)},
                     {"velocity", channel_json(o.velocity)},
                     {"input", channel_json(o.input)},
                     {"lyapunov", channel_json(o.lyapunov)}};
  j["final"] = {{"e_norm", o.final_e_norm}, {"edot_norm", o.final_edot_norm}, {"r_norm", o.final_r_norm}};
  j["peak"] = {{"r_norm", o.peak_r_norm},     {"tau_norm", o.peak_tau_norm},
               {"q_norm", o.peak_q_norm},     {"qdot_norm", o.peak_qdot_norm},
               {"e_norm", o.peak_e_norm},     {"edot_norm", o.peak_edot_norm}};
  if (o.lyapunov_checked) {
    j["lyapunov"] = {{"monotone", o.lyapunov_monotone},
                     {"tolerance", o.lyapunov_tolerance},
                     {"max_increase", o.max_lyapunov_increase}};
  } else {
    j["lyapunov"] = nullptr;
  }
  j["initial_conditions"] = {{"pass", result.initial_check.pass},
                             {"e_margin", result.initial_check.e_margin},
                             {"edot_margin", result.initial_check.edot_margin},
                             {"r_margin", result.initial_check.r_margin}};
  j["feasibility"] = feasibility_json(result.feasibility);
  return j;
}

void emit_summary(const RunResult& result, std::string_view scenario, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << summary_json(result, scenario).dump(2) << '\n';
  finish(out, path);
}

json comparison_json(const ScenarioReport& report) {
  json j;
  j["scenario"] = report.scenario;
  j["mode"] = std::string(to_string(report.mode));
  if (report.proposed && report.classical) {
    j["note"] = "both arms start from identical initial conditions and share K1 and alpha";
  }
  if (report.proposed) j["proposed"] = summary_json(*report.proposed, report.scenario);
  if (report.classical) j["classical"] = summary_json(*report.classical, report.scenario);
  j["exit_code"] = exit_code_for(report);
  return j;
}

std::string comparison_text(const ScenarioReport& report) {
  std::vector<std::pair<std::string, const RunResult*>> arms;
  if (report.proposed) arms.emplace_back("proposed", &*report.proposed);
  if (report.classical) arms.emplace_back("classical", &*report.classical);

  std::ostringstream os;
  os << "scenario: " << report.scenario << "\n";
  if (arms.size() == 2) os << "(shared K1 and alpha; identical initial conditions)\n";
  os << std::left << std::setw(22) << "";
  for (const auto& [name, _] : arms) os << std::setw(22) << name;
  os << "\n";
  auto line = [&](const std::string& label, const std::function<std::string(const RunResult&)>& f) {
    os << std::setw(22) << label;
    for (const auto& arm : arms) os << std::setw(22) << f(*arm.second);
    os << "\n";
  };
  auto num = [](double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
  };
  line("status", [](const RunResult& r) { return std::string(to_string(r.outcome.status)); });
  line("peak ||r||", [&](const RunResult& r) { return num(r.outcome.peak_r_norm); });
  line("peak ||e||", [&](const RunResult& r) { return num(r.outcome.peak_e_norm); });
  line("peak ||edot||", [&](const RunResult& r) { return num(r.outcome.peak_edot_norm); });
  line("peak ||q||", [&](const RunResult& r) { return num(r.outcome.peak_q_norm); });
  line("peak ||qdot||", [&](const RunResult& r) { return num(r.outcome.peak_qdot_norm); });
  line("peak ||tau||", [&](const RunResult& r) { return num(r.outcome.peak_tau_norm); });
  line("violations q/qdot/tau", [](const RunResult& r) {
    return std::to_string(r.outcome.position.count) + "/" + std::to_string(r.outcome.velocity.count) +
           "/" + std::to_string(r.outcome.input.count);
  });
  line("first violation", [&](const RunResult& r) {
    const auto& v = r.outcome.first_violation;
    return v ? std::string(to_string(v->channel)) + " @ " + num(v->t) : std::string("none");
  });
  line("final ||e||", [&](const RunResult& r) { return num(r.outcome.final_e_norm); });
  line("final ||r||", [&](const RunResult& r) { return num(r.outcome.final_r_norm); });
  return os.str();
}

void emit_figures(const RunResult& result, const ConstraintSpec& spec, const std::filesystem::path& dir,
                  std::string_view prefix) {
  const auto& rows = result.log.rows;
  const Eigen::Index n = result.log.dof;
  const FeasibilityReport& f = result.feasibility;

  auto write = [&](const std::string& stem, std::vector<std::string> cols,
                   const std::function<std::vector<double>(const LogRow&)>& values) {
    const auto path = dir / (std::string(prefix) + "_" + stem + ".csv");
    auto out = open_for_write(path);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const LogRow& r : rows) {
      const auto vals = values(r);
      for (std::size_t i = 0; i < vals.size(); ++i) out << (i ? "," : "") << fmt17(vals[i]);
      out << '\n';
    }
    finish(out, path);
  };
  auto names = [n](std::vector<std::string> cols, const char* stem) {
    append_indexed(cols, stem, n);
    return cols;
  };
  auto push = [](std::vector<double>& v, const Eigen::VectorXd& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) v.push_back(x(i));
  };

  {
    auto cols = names({"t"}, "r");
    cols.insert(cols.end(), {"r_norm", "kappa"});
    write("fig1_filtered_error", cols, [&](const LogRow& r) {
      std::vector<double> v{r.t};
      push(v, r.r);
      v.insert(v.end(), {r.r_norm, f.kappa});
      return v;
    });
  }
  {
    auto cols = names(names({"t"}, "e"), "edot");
    cols.insert(cols.end(), {"e_norm", "edot_norm", "delta1", "delta2"});
    write("fig2_tracking_error", cols, [&](const LogRow& r) {
      std::vector<double> v{r.t};
      push(v, r.e);
      push(v, r.edot);
      v.insert(v.end(), {r.e_norm, r.edot_norm, f.delta1, f.delta2});
      return v;
    });
  }
  {
    auto cols = names(names({"t"}, "q"), "qd");
    cols.insert(cols.end(), {"q_norm", "beta1"});
    write("fig3_position", cols, [&](const LogRow& r) {
      std::vector<double> v{r.t};
      push(v, r.q);
      push(v, r.q_d);
      v.insert(v.end(), {r.q.norm(), spec.beta1});
      return v;
    });
  }
  {
    auto cols = names(names({"t"}, "qdot"), "qdot_d");
    cols.insert(cols.end(), {"qdot_norm", "beta2"});
    write("fig4_velocity", cols, [&](const LogRow& r) {
      std::vector<double> v{r.t};
      push(v, r.qdot);
      push(v, r.qdot_d);
      v.insert(v.end(), {r.qdot.norm(), spec.beta2});
      return v;
    });
  }
  {
    auto cols = names({"t"}, "tau");
    cols.insert(cols.end(), {"tau_norm", "tau_max"});
    write("fig5_input", cols, [&](const LogRow& r) {
      std::vector<double> v{r.t};
      push(v, r.tau);
      v.insert(v.end(), {r.tau_norm, spec.tau_max});
      return v;
    });
  }
}

}  // namespace safetrack
