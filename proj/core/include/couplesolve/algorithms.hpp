#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "couplesolve/simnet.hpp"
#include "couplesolve/slack_engine.hpp"

namespace couplesolve {

// ---------------------------------------------------------------------------
// Accelerated dual averaging over the slack variables (strongly convex case).
// ---------------------------------------------------------------------------

struct AdaConfig {
  double gamma = 0.0;  // base step; gamma_t = gamma * (t + 1)
  int rounds = 0;
  /// Stop once ||grad phi||_inf at the evaluated point drops to this value.
  std::optional<double> grad_tolerance;
};

struct AdaSchedule {
  double gamma_t = 0.0;
  double big_gamma_t = 0.0;  // sum_{tau <= t} gamma_tau
};

/// gamma_t = gamma (t + 1), Gamma_t = gamma t (t + 3) / 2. Requires t >= 1.
AdaSchedule ada_schedule(int t, double gamma);

struct AdaState {
  SlackState y;      // point where the next gradient is taken
  SlackState z;      // gradient accumulator
  SlackState y_hat;  // output sequence
  int t = 0;         // rounds completed
};

AdaState ada_initial_state(const SlackState& y0);

// ---------------------------------------------------------------------------
// Projected gradient over the box [-C, C]^n_y (convex, possibly not strongly).
// ---------------------------------------------------------------------------

/// 1/(2 alpha_phi); when alpha_phi is zero the dual function is flat in the
/// slack and any step works, so 1 is returned.
double default_ada_gamma(double alpha_phi);

struct PgdConfig {
  double box_bound = 0.0;   // C
  double grad_bound = 0.0;  // G
  int rounds = 0;
  std::optional<double> grad_tolerance;

  /// Half the squared diameter of the box: 2 C^2 n_y.
  double theta(std::size_t slack_dimension) const {
    return 2.0 * box_bound * box_bound * static_cast<double>(slack_dimension);
  }
};

/// sqrt(2 Theta) / (G sqrt(t + 1)). Requires t >= 1.
double pgd_stepsize(int t, const PgdConfig& config, std::size_t slack_dimension);

// ---------------------------------------------------------------------------
// Rounds, runs and traces.
// ---------------------------------------------------------------------------

/// What one round observed. Round 0 is the evaluation at the initial slack.
struct RoundRecord {
  int round = 0;
  /// phi at the slack point the round evaluated (ada: the extrapolated y;
  /// pgd: the updated y).
  double phi = 0.0;
  /// phi at the output point y_hat (ada only; NaN for pgd).
  double phi_hat = 0.0;
  /// Output objective minus the oracle value (NaN without an oracle).
  double obj_err = 0.0;
  /// Largest coupling violations over every primal evaluated this round.
  double max_ineq_viol = 0.0;
  double max_eq_resid = 0.0;
  /// ||(I - P^[l]) multipliers^[l]|| per constraint.
  std::vector<double> dual_cons_err;
  /// Messages sent by the algorithm during this round.
  long long msgs = 0;
  /// ||grad phi||_inf at the evaluated point.
  double grad_inf = 0.0;
};

enum class Algorithm { kAda, kPgd };

const char* algorithm_name(Algorithm algorithm);

struct RunTrace {
  Algorithm algorithm = Algorithm::kAda;
  int n_constraints = 0;
  std::vector<RoundRecord> records;
  bool converged = false;
  SlackState final_y;
  SlackState final_y_hat;  // ada only
  /// Primal output: x(y_hat) for ada, x(y) for pgd.
  Primal output;
  /// Multipliers per constraint at the final evaluation.
  BlockValues final_multipliers;
  std::vector<std::string> warnings;

  double max_ineq_violation() const;
  double max_eq_residual() const;
};

/// Everything the algorithm needs besides the problem.
struct RunRequest {
  Algorithm algorithm = Algorithm::kAda;
  AdaConfig ada;
  PgdConfig pgd;
  /// Initial slack; empty means zeros.
  SlackState y0;
  /// Oracle value for obj_err.
  std::optional<double> f_star;
  /// Smoothness bound, when known; an ada step above 1/(2 alpha_phi) warns.
  std::optional<double> alpha_phi;
  /// Proceed even when some agent fails the rank check.
  bool allow_rank_deficient = false;
  int threads = 1;
};

/// Record for the initial slack.
RoundRecord initial_record(const CoupledProblem& cp, const RunRequest& request, const SlackState& y0);

/// One round of accelerated dual averaging. Round t = 1 evaluates the
/// gradient at y and sets y_hat = z = -gamma_1 grad. Later rounds extrapolate
/// y = (1 - gamma_t/Gamma_t) y_hat + (gamma_t/Gamma_t) z, evaluate the
/// gradient there once, then update z -= gamma_t grad and
/// y_hat = (1 - gamma_t/Gamma_t) y_hat + (gamma_t/Gamma_t) z.
RoundRecord ada_round(AdaState& state, const CoupledProblem& cp, const AdaConfig& config, Exchange& exchange,
                      const std::optional<double>& f_star = std::nullopt, int threads = 1);

/// One round of projected gradient: y <- clamp(y - gamma_t grad phi(y), -C, C).
RoundRecord pgd_round(SlackState& y, int t, const CoupledProblem& cp, const PgdConfig& config, Exchange& exchange,
                      const std::optional<double>& f_star = std::nullopt, int threads = 1);

/// Runs the requested algorithm for its configured rounds. Message passing
/// goes through `exchange` when given and through direct memory otherwise.
/// Throws ValidationError when an induced subgraph is disconnected or (unless
/// allowed) an agent fails the rank check; solver failures propagate.
RunTrace run(const CoupledProblem& cp, const RunRequest& request, Exchange* exchange = nullptr);

/// Replays `request` over a SimNetwork in audit mode, optionally with one
/// agent reading a value it was not sent.
struct AuditResult {
  bool passed = false;
  std::vector<std::string> violations;
  RunTrace trace;
};

AuditResult locality_audit(const CoupledProblem& cp, const RunRequest& request,
                           std::optional<InjectedFault> fault = std::nullopt);

/// Sample-based gradient bound for the box: the largest ||grad phi|| over
/// 2^min(n_y, 10) corners (all corners when n_y <= 10, random ones
/// otherwise) and 50 uniform interior points, doubled. Returns 0 when every
/// sample is at roundoff level (phi flat in the slack).
double estimate_gradient_bound(const CoupledProblem& cp, double box_bound, std::uint64_t seed = 20240901);

/// 10 * max(|b_i^[m]|, |g_i^[q]|, ||y_ref||_inf) where y_ref is a slack
/// reconstructed from an oracle solution.
double default_box_bound(const CoupledProblem& cp, const SlackState& oracle_slack);

/// True when every coordinate lies strictly inside (-C, C).
bool box_inactive(const SlackState& y, double box_bound);

}  // namespace couplesolve
