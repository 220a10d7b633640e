#include "couplesolve/tools/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "couplesolve/errors.hpp"

namespace couplesolve::io {

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ValidationError(where + ": expected a number");
  return v.get<double>();
}

int positive_index(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 1) throw ValidationError(where + ": expected a 1-based index");
  return static_cast<int>(v.get<long long>());
}

Eigen::VectorXd vector_of(const json& v, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": expected an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out(static_cast<Eigen::Index>(k)) = number(v[k], where);
  return out;
}

Eigen::MatrixXd matrix_of(const json& v, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(v[0].size());
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::VectorXd row = vector_of(v[static_cast<std::size_t>(r)], where);
    if (row.size() != cols) throw ValidationError(where + ": ragged matrix");
    out.row(r) = row.transpose();
  }
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

struct RowEntry {
  int agent;
  int row;
  Eigen::VectorXd coeffs;
  double offset;
};

std::vector<RowEntry> row_entries(const json& doc, const std::string& key) {
  std::vector<RowEntry> out;
  if (!doc.contains(key)) return out;
  const json& arr = doc.at(key);
  if (!arr.is_array()) throw ValidationError(key + ": expected an array");
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string where = key + "[" + std::to_string(k) + "]";
    reject_unknown(arr[k], {"agent", "row", "coeffs", "offset"}, where);
    RowEntry e;
    e.agent = positive_index(require(arr[k], "agent", where), where + ".agent") - 1;
    e.row = positive_index(require(arr[k], "row", where), where + ".row") - 1;
    e.coeffs = vector_of(require(arr[k], "coeffs", where), where + ".coeffs");
    e.offset = arr[k].contains("offset") ? number(arr[k].at("offset"), where + ".offset") : 0.0;
    out.push_back(std::move(e));
  }
  return out;
}

void place_rows(std::vector<AgentCoupling>& coupling, const std::vector<RowEntry>& entries, bool equality,
                const std::string& key) {
  std::set<std::pair<int, int>> seen;
  for (const auto& e : entries) {
    if (e.agent >= static_cast<int>(coupling.size())) {
      throw ValidationError(key + ": agent " + std::to_string(e.agent + 1) + " does not exist");
    }
    if (!seen.insert({e.agent, e.row}).second) {
      throw ValidationError(key + ": duplicate entry for agent " + std::to_string(e.agent + 1) + ", row " +
                            std::to_string(e.row + 1));
    }
    auto& c = coupling[static_cast<std::size_t>(e.agent)];
    Eigen::MatrixXd& rows = equality ? c.eq_coeffs : c.ineq_coeffs;
    Eigen::VectorXd& offsets = equality ? c.eq_offset : c.ineq_offset;
    if (e.row >= rows.rows()) {
      throw ValidationError(key + ": row " + std::to_string(e.row + 1) + " exceeds the declared count");
    }
    if (e.coeffs.size() != rows.cols()) {
      throw ValidationError(key + ": agent " + std::to_string(e.agent + 1) + " coefficients must have length " +
                            std::to_string(rows.cols()));
    }
    rows.row(e.row) = e.coeffs.transpose();
    offsets(e.row) = e.offset;
  }
}

int declared_count(const json& doc, const std::string& key, const std::vector<RowEntry>& entries) {
  int used = 0;
  for (const auto& e : entries) used = std::max(used, e.row + 1);
  if (!doc.contains(key)) return used;
  const json& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ValidationError(key + ": expected a nonnegative integer");
  const int declared = static_cast<int>(v.get<long long>());
  if (declared < used) throw ValidationError(key + ": smaller than the largest row index used");
  return declared;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ProblemDocument parse_problem(const json& doc) {
  reject_unknown(doc, {"agents", "m_ineq", "q_eq", "ineq", "eq", "edges", "weights"}, "problem");
  const json& agents = require(doc, "agents", "problem");
  if (!agents.is_array() || agents.empty()) throw ValidationError("agents: expected a nonempty array");

  ProblemDocument out;
  ProblemSpec& p = out.spec;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string where = "agents[" + std::to_string(i) + "]";
    reject_unknown(agents[i], {"dim", "hessian", "linear", "constant"}, where);
    const json& dim_v = require(agents[i], "dim", where);
    if (!dim_v.is_number_integer() || dim_v.get<long long>() < 1) throw ValidationError(where + ".dim: expected a positive integer");
    const auto d = static_cast<Eigen::Index>(dim_v.get<long long>());
    AgentObjective f;
    f.hessian = matrix_of(require(agents[i], "hessian", where), where + ".hessian");
    f.linear = agents[i].contains("linear") ? vector_of(agents[i].at("linear"), where + ".linear") : Eigen::VectorXd::Zero(d);
    f.constant = agents[i].contains("constant") ? number(agents[i].at("constant"), where + ".constant") : 0.0;
    if (f.hessian.rows() != d || f.hessian.cols() != d) throw ValidationError(where + ".hessian: expected " + std::to_string(d) + "x" + std::to_string(d));
    if (f.linear.size() != d) throw ValidationError(where + ".linear: expected length " + std::to_string(d));
    p.objectives.push_back(std::move(f));
  }

  const auto ineq = row_entries(doc, "ineq");
  const auto eq = row_entries(doc, "eq");
  p.m_ineq = declared_count(doc, "m_ineq", ineq);
  p.q_eq = declared_count(doc, "q_eq", eq);
  for (const auto& f : p.objectives) {
    AgentCoupling c;
    c.ineq_coeffs = Eigen::MatrixXd::Zero(p.m_ineq, f.dim());
    c.ineq_offset = Eigen::VectorXd::Zero(p.m_ineq);
    c.eq_coeffs = Eigen::MatrixXd::Zero(p.q_eq, f.dim());
    c.eq_offset = Eigen::VectorXd::Zero(p.q_eq);
    p.coupling.push_back(std::move(c));
  }
  place_rows(p.coupling, ineq, false, "ineq");
  place_rows(p.coupling, eq, true, "eq");

  std::vector<Edge> edges;
  if (doc.contains("edges")) {
    const json& e = doc.at("edges");
    if (!e.is_array()) throw ValidationError("edges: expected an array of pairs");
    for (std::size_t k = 0; k < e.size(); ++k) {
      const std::string where = "edges[" + std::to_string(k) + "]";
      if (!e[k].is_array() || e[k].size() != 2) throw ValidationError(where + ": expected a pair");
      edges.push_back({positive_index(e[k][0], where) - 1, positive_index(e[k][1], where) - 1});
    }
  }
  p.graph = Graph(p.n_agents(), std::move(edges));

  if (doc.contains("weights")) {
    const json& w = doc.at("weights");
    if (!w.is_array()) throw ValidationError("weights: expected an array");
    for (std::size_t k = 0; k < w.size(); ++k) {
      const std::string where = "weights[" + std::to_string(k) + "]";
      reject_unknown(w[k], {"constraint", "matrix"}, where);
      WeightMatrix wm;
      wm.constraint = positive_index(require(w[k], "constraint", where), where + ".constraint") - 1;
      if (wm.constraint >= p.n_constraints()) throw ValidationError(where + ".constraint: out of range");
      wm.entries = matrix_of(require(w[k], "matrix", where), where + ".matrix");
      out.custom_weights.push_back(std::move(wm));
    }
  }
  p.validate();
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path + "': " + e.what());
  }
}

ProblemDocument load_problem(const std::string& path) {
  try {
    return parse_problem(read_json_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

json problem_to_json(const ProblemSpec& spec, const std::vector<WeightMatrix>& custom_weights) {
  json doc;
  doc["agents"] = json::array();
  for (const auto& f : spec.objectives) {
    doc["agents"].push_back({{"dim", f.dim()}, {"hessian", matrix_json(f.hessian)}, {"linear", vector_json(f.linear)},
                             {"constant", f.constant}});
  }
  doc["m_ineq"] = spec.m_ineq;
  doc["q_eq"] = spec.q_eq;
  doc["ineq"] = json::array();
  doc["eq"] = json::array();
  for (int i = 0; i < spec.n_agents(); ++i) {
    const auto& c = spec.coupling[static_cast<std::size_t>(i)];
    for (int m = 0; m < spec.m_ineq; ++m) {
      if (c.ineq_coeffs.row(m).isZero(0.0) && c.ineq_offset(m) == 0.0) continue;
      doc["ineq"].push_back({{"agent", i + 1}, {"row", m + 1}, {"coeffs", vector_json(c.ineq_coeffs.row(m).transpose())},
                             {"offset", c.ineq_offset(m)}});
    }
    for (int q = 0; q < spec.q_eq; ++q) {
      if (c.eq_coeffs.row(q).isZero(0.0) && c.eq_offset(q) == 0.0) continue;
      doc["eq"].push_back({{"agent", i + 1}, {"row", q + 1}, {"coeffs", vector_json(c.eq_coeffs.row(q).transpose())},
                           {"offset", c.eq_offset(q)}});
    }
  }
  doc["edges"] = json::array();
  for (const auto& e : spec.graph.edges()) doc["edges"].push_back({e.first + 1, e.second + 1});
  if (!custom_weights.empty()) {
    doc["weights"] = json::array();
    for (const auto& w : custom_weights) doc["weights"].push_back({{"constraint", w.constraint + 1}, {"matrix", matrix_json(w.entries)}});
  }
  return doc;
}

WeightSet complete_weights(const ConstraintTopology& topology, const std::vector<WeightMatrix>& custom) {
  WeightSet out = metropolis_weight_set(topology);
  for (const auto& w : custom) out[static_cast<std::size_t>(w.constraint)] = w;
  return out;
}

std::string trace_header(int n_constraints) {
  std::string h = "round,phi,phi_hat,obj_err,max_ineq_viol,max_eq_resid";
  for (int l = 1; l <= n_constraints; ++l) h += ",dual_cons_err_" + std::to_string(l);
  h += ",msgs,grad_inf";
  return h;
}

void write_trace(std::ostream& out, int n_constraints, const std::vector<RoundRecord>& records) {
  out << trace_header(n_constraints) << '\n';
  for (const auto& r : records) {
    out << r.round << ',' << format_double(r.phi) << ',' << format_double(r.phi_hat) << ',' << format_double(r.obj_err)
        << ',' << format_double(r.max_ineq_viol) << ',' << format_double(r.max_eq_resid);
    for (int l = 0; l < n_constraints; ++l) {
      const double e = static_cast<std::size_t>(l) < r.dual_cons_err.size() ? r.dual_cons_err[static_cast<std::size_t>(l)]
                                                                            : std::nan("");
      out << ',' << format_double(e);
    }
    out << ',' << r.msgs << ',' << format_double(r.grad_inf) << '\n';
  }
}

void emit_trace(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  write_trace(out, trace.n_constraints, trace.records);
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

TraceTable parse_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("trace: missing header");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  TraceTable table;
  table.n_constraints = static_cast<int>(cols.size()) - 8;
  if (table.n_constraints < 0 || line != trace_header(table.n_constraints)) throw ValidationError("trace: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) f.push_back(c);
    if (f.size() != cols.size()) throw ValidationError("trace: row has " + std::to_string(f.size()) + " fields");
    RoundRecord r;
    std::size_t k = 0;
    r.round = std::stoi(f[k++]);
    r.phi = std::strtod(f[k++].c_str(), nullptr);
    r.phi_hat = std::strtod(f[k++].c_str(), nullptr);
    r.obj_err = std::strtod(f[k++].c_str(), nullptr);
    r.max_ineq_viol = std::strtod(f[k++].c_str(), nullptr);
    r.max_eq_resid = std::strtod(f[k++].c_str(), nullptr);
    for (int l = 0; l < table.n_constraints; ++l) r.dual_cons_err.push_back(std::strtod(f[k++].c_str(), nullptr));
    r.msgs = std::stoll(f[k++]);
    r.grad_inf = std::strtod(f[k++].c_str(), nullptr);
    table.records.push_back(std::move(r));
  }
  return table;
}

void write_trajectory(std::ostream& out, const cbf::ClosedLoopResult& result, double feasibility_tolerance) {
  if (result.steps.empty()) {
    out << "t\n";
    return;
  }
  const std::size_t n = result.steps.front().positions.size();
  const std::size_t k = result.steps.front().barrier_values.size();
  out << 't';
  for (std::size_t i = 1; i <= n; ++i) out << ",z" << i << "_x,z" << i << "_y";
  for (std::size_t b = 1; b <= k; ++b) out << ",g" << b;
  for (std::size_t i = 1; i <= n; ++i) out << ",u" << i << "_x,u" << i << "_y";
  for (std::size_t b = 1; b <= k; ++b) out << ",feasible_" << b;
  out << ",inner_max_viol\n";
  for (const auto& s : result.steps) {
    out << format_double(s.time);
    for (const auto& z : s.positions) out << ',' << format_double(z(0)) << ',' << format_double(z(1));
    for (double g : s.barrier_values) out << ',' << format_double(g);
    for (const auto& u : s.inputs) out << ',' << format_double(u(0)) << ',' << format_double(u(1));
    for (double r : s.condition_residuals) out << ',' << (r <= feasibility_tolerance ? 1 : 0);
    out << ',' << format_double(s.inner_max_violation) << '\n';
  }
}

json oracle_to_json(const OracleSolution& solution) {
  json out;
  out["x_star"] = json::array();
  for (const auto& xi : solution.x_star) out["x_star"].push_back(vector_json(xi));
  out["f_star"] = solution.f_star;
  out["ineq_multipliers"] = vector_json(solution.ineq_multipliers);
  out["eq_multipliers"] = vector_json(solution.eq_multipliers);
  out["active_set"] = json::array();
  for (int m : solution.active_set) out["active_set"].push_back(m + 1);
  out["unique"] = solution.unique;
  return out;
}

std::string gnuplot_script(const std::string& csv_path, int n_constraints, bool has_oracle) {
  std::ostringstream s;
  s << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set logscale y\n"
    << "set xlabel 'round'\n"
    << "set multiplot layout 2,1\n";
  if (has_oracle) {
    s << "set ylabel 'objective error'\n"
      << "plot '" << csv_path << "' using 1:(abs($4)) with lines title 'obj_err'\n";
  } else {
    s << "set ylabel 'max violation'\n"
      << "plot '" << csv_path << "' using 1:($5+1e-300) with lines title 'max_ineq_viol'\n";
  }
  s << "set ylabel 'dual consensus error'\n"
    << "plot";
  for (int l = 1; l <= n_constraints; ++l) {
    s << (l == 1 ? " " : ", ") << "'" << csv_path << "' using 1:" << 6 + l << " with lines title 'constraint " << l << "'";
  }
  if (n_constraints == 0) s << " 0 notitle";
  s << "\nunset multiplot\n";
  return s.str();
}

std::string gnuplot_trajectory_script(const std::string& csv_path, int n_agents) {
  std::ostringstream s;
  s << "set datafile separator ','\n"
    << "set size ratio -1\n"
    << "set xlabel 'x'\nset ylabel 'y'\n"
    << "plot";
  for (int i = 1; i <= n_agents; ++i) {
    s << (i == 1 ? " " : ", ") << "'" << csv_path << "' using " << 2 * i << ":" << 2 * i + 1
      << " with lines title 'agent " << i << "'";
  }
  s << "\n";
  return s.str();
}

}  // namespace couplesolve::io
