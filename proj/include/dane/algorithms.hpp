#ifndef DANE_ALGORITHMS_HPP
#define DANE_ALGORITHMS_HPP

#include <optional>
#include <vector>

#include "dane/solver.hpp"

namespace dane {

enum class AlgorithmKind {
  kDaneLS,
  kDaneHB,
  kDaneHBLM,
  kInexactDane,
  kGradientDescent,
};

enum class LineSearchKind { kNone, kOptionI, kOptionII };
enum class InitKind { kZero, kLocalArgmin };
enum class SolverKind { kAuto, kDirect, kSvrg };

enum class TerminalStatus { kConverged, kRoundLimit, kSolverFailure };

/// When a run stops. The gradient-norm target is observable from the round's
/// own reduction; the other two need externally supplied reference solutions
/// and are checked against unbilled diagnostics.
struct StopTarget {
  enum class Kind { kGradNorm, kSuboptimality, kIterateError };
  Kind kind = Kind::kGradNorm;
  double eps = 1e-6;
  Vector w_star;       // kIterateError
  double f_star = 0;   // kSuboptimality

  static StopTarget grad_norm(double eps) {
    return {Kind::kGradNorm, eps, {}, 0};
  }
  static StopTarget iterate_error(double eps, Vector w_star) {
    return {Kind::kIterateError, eps, std::move(w_star), 0};
  }
  static StopTarget suboptimality(double eps, double f_star) {
    return {Kind::kSuboptimality, eps, {}, f_star};
  }
};

struct RunConfig {
  AlgorithmKind algorithm = AlgorithmKind::kDaneLS;
  double gamma = 0;
  double rho = 0.25;  // must lie in (0, 1/3) when a line search is active
  LineSearchKind line_search = LineSearchKind::kNone;
  std::optional<double> beta_override;  // otherwise momentum_beta(mu, gamma)
  InitKind init = InitKind::kZero;
  ToleranceSchedule schedule;
  int max_rounds = 500;
  StopTarget target;
  SolverKind solver = SolverKind::kAuto;
  Seed solver_seed;       // per-round/per-machine streams are derived from it
  int svrg_max_epochs = 200;
  int inner_max_rounds = 20000;  // cap for the linear-model inner loops
  SmoothnessProfile profile;
};

struct RoundRecord {
  int t = 0;
  Vector w;
  double f_value = 0;
  double grad_norm = 0;       // serial recomputation, unbilled
  double eta = 1.0;
  double eps_t = 0;
  std::int64_t inner_ifo = 0;
  double cert_residual = 0;      // recomputed ||grad P(w_tilde)||
  double tilde_step_norm = 0;    // ||w_tilde - w_prev|| before any damping
  int ls_value_evals = 0;
  bool momentum_fallback = false;
  std::int64_t inner_rounds = 0;  // communication spent inside this round
  CommunicationLedger ledger;     // snapshot at end of round
};

/// Everything a run produced: the initial state at records[0] followed by one
/// record per outer round, plus the terminal status. Immutable after the run.
struct RunTranscript {
  std::vector<RoundRecord> records;
  TerminalStatus status = TerminalStatus::kRoundLimit;
  bool premise_warning = false;  // local/global Hessian deviation exceeded gamma

  const RoundRecord& last() const { return records.back(); }
  int outer_rounds() const { return static_cast<int>(records.size()) - 1; }

  /// Communication rounds on the ledger when the transcript first satisfies
  /// the given condition; -1 if it never does.
  std::int64_t rounds_to_grad_norm(double eps) const;
  std::int64_t rounds_to_iterate_error(double eps, const Vector& w_star) const;
  std::int64_t rounds_to_suboptimality(double eps, double f_star) const;
};

/// Momentum strength (1 - sqrt(mu / (mu + 2 gamma)))^2.
double momentum_beta(double mu, double gamma);

/// The sufficient-descent functional of the backtracking rules:
///   eta * rho * <grad F1(w_tilde) - grad F1(w_prev) + gamma (w_tilde -
///   w_prev), w_tilde - w_prev>  -  eta * eps_t * ||w_tilde - w_prev||.
double psi(const Vector& w_tilde, const Vector& w_prev, double eta, double rho,
           double gamma, double eps_t, const Objective& local_view);

struct LineSearchResult {
  double eta = 1.0;
  int value_evals = 0;
  bool fell_back = false;  // only the momentum safeguard may fall back
  double f_new = 0;        // accepted objective value
};

/// Backtracking with global value evaluation: halve eta from 1 until
///   F(w_prev + eta (w_tilde - w_prev)) <= F(w_prev) - psi(eta).
/// Every trial costs one value round; pass `f_prev` to reuse a known
/// F(w_prev), otherwise one extra value round is charged for it.
/// Throws NumericError when eta underflows 2^-60 (a sign of wrong constants).
LineSearchResult line_search_option1(Cluster& cluster, const Vector& w_prev,
                                     const Vector& w_tilde, double rho,
                                     double gamma, double eps_t,
                                     std::optional<double> f_prev = {});

/// Backtracking on the local curvature model; needs no communication:
///   <g_prev, d> + d^T (hess F1(w_prev) + gamma I) d + nu/6 ||d||^3
///     <= -psi(eta),   d = eta (w_tilde - w_prev).
double line_search_option2(const Vector& w_prev, const Vector& w_tilde,
                           const Vector& global_grad_prev, double rho,
                           double gamma, double nu, double eps_t,
                           const Objective& local_view);

/// Master-only proximal Newton-type loop with optional backtracking.
/// Quadratic objectives skip the line search (the unit step already
/// contracts).
RunTranscript run_dane_ls(Cluster& cluster, const RunConfig& cfg);

/// Same loop with the heavy-ball update w = w_tilde + beta (w - w_prev).
/// An active line search acts as a safeguard on the combined step; if it
/// rejects down to 2^-20 the momentum step is taken anyway and flagged.
RunTranscript run_dane_hb(Cluster& cluster, const RunConfig& cfg);

/// Outer loop for linear prediction models: per round, build the anchored
/// quadratic model of the objective and drive it with the heavy-ball loop
/// (warm-started at the anchor) until the model's suboptimality is within
/// the round tolerance, certified through ||grad Q||^2 / (2 mu).
RunTranscript run_dane_hb_lm(Cluster& cluster, const RunConfig& cfg);

/// The classic all-workers baseline: every machine solves its own local
/// model, the master averages. Each round charges one gradient reduction and
/// one model-averaging exchange.
RunTranscript run_inexact_dane(Cluster& cluster, const RunConfig& cfg);

/// Distributed gradient descent with step 1/L; one reduction per round.
RunTranscript run_gd(Cluster& cluster, const RunConfig& cfg);

RunTranscript run_algorithm(Cluster& cluster, const RunConfig& cfg);

}  // namespace dane

#endif  // DANE_ALGORITHMS_HPP
