#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "couplesolve/algorithms.hpp"
#include "couplesolve/cbf_sim.hpp"
#include "couplesolve/centralized_oracle.hpp"
#include "couplesolve/problem_model.hpp"

namespace couplesolve::io {

using nlohmann::json;

/// A problem document plus any weight matrices it overrides. Constraint and
/// agent indices are 1-based in JSON and 0-based in memory.
struct ProblemDocument {
  ProblemSpec spec;
  std::vector<WeightMatrix> custom_weights;
};

/// Schema:
///   { "agents": [{"dim": d, "hessian": [[...]], "linear": [...], "constant": c}],
///     "m_ineq": M, "q_eq": Q,
///     "ineq": [{"agent": i, "row": m, "coeffs": [...], "offset": b}],
///     "eq":   [{"agent": i, "row": q, "coeffs": [...], "offset": g}],
///     "edges": [[i, j], ...],
///     "weights": [{"constraint": l, "matrix": [[...]]}] }
/// m_ineq/q_eq default to the largest row index used; linear defaults to
/// zeros and constant to 0. Unknown keys are rejected.
ProblemDocument parse_problem(const json& doc);
ProblemDocument load_problem(const std::string& path);
json problem_to_json(const ProblemSpec& spec, const std::vector<WeightMatrix>& custom_weights = {});

/// Metropolis weights for every constraint not covered by `custom`.
WeightSet complete_weights(const ConstraintTopology& topology, const std::vector<WeightMatrix>& custom);

json read_json_file(const std::string& path);

/// round,phi,phi_hat,obj_err,max_ineq_viol,max_eq_resid,dual_cons_err_1..L,msgs,grad_inf
std::string trace_header(int n_constraints);
void write_trace(std::ostream& out, int n_constraints, const std::vector<RoundRecord>& records);
void emit_trace(const RunTrace& trace, const std::string& path);

struct TraceTable {
  int n_constraints = 0;
  std::vector<RoundRecord> records;
};
TraceTable parse_trace(std::istream& in);

/// t, z<i>_x, z<i>_y, g<k>, u<i>_x, u<i>_y, feasible_<k>, inner_max_viol
void write_trajectory(std::ostream& out, const cbf::ClosedLoopResult& result, double feasibility_tolerance = 1e-6);

json oracle_to_json(const OracleSolution& solution);

/// gnuplot script plotting a trace CSV on log axes.
std::string gnuplot_script(const std::string& csv_path, int n_constraints, bool has_oracle);
/// gnuplot script plotting agent paths from a trajectory CSV.
std::string gnuplot_trajectory_script(const std::string& csv_path, int n_agents);

std::string format_double(double v);

}  // namespace couplesolve::io
