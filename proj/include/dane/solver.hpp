#ifndef DANE_SOLVER_HPP
#define DANE_SOLVER_HPP

#include <cstdint>

#include "dane/cluster.hpp"

namespace dane {

/// The master's proximal local model around an anchor point:
///   P(w) = F1(w) + <g - grad F1(anchor), w> + gamma/2 ||w - anchor||^2,
/// where g is the reduced global gradient at the anchor. By construction
/// grad P(anchor) = g exactly.
class Subproblem {
 public:
  Subproblem(const Objective* local, Vector anchor, Vector global_grad,
             double gamma);

  Index dim() const { return anchor_.size(); }
  Index samples() const { return local_->samples(); }
  double gamma() const { return gamma_; }
  const Vector& anchor() const { return anchor_; }
  const Vector& global_grad() const { return global_grad_; }
  const Objective& local() const { return *local_; }
  bool quadratic() const { return local_->constant_hessian(); }

  double value(const Vector& w) const;
  Vector gradient(const Vector& w) const;
  Vector hessian_vec(const Vector& w, const Vector& v) const;
  /// out += scale * grad p_k(w), where p_k is the k-th local sample's loss
  /// plus the (deterministic) linear correction and proximal terms.
  void add_sample_gradient(Index k, const Vector& w, double scale,
                           Vector& out) const;

 private:
  const Objective* local_;
  Vector anchor_;
  Vector global_grad_;
  Vector correction_;  // global_grad - grad F1(anchor)
  double gamma_;
};

/// Builds the master's subproblem. The master's local gradient at the anchor
/// is reused from the gradient round that produced `global_grad`, so no
/// additional oracle work is billed here.
Subproblem build_subproblem(const Cluster& cluster, const Vector& anchor,
                            const Vector& global_grad, double gamma);

/// Same model built for an arbitrary machine (used by the all-workers
/// baseline).
Subproblem build_subproblem_for(const Cluster& cluster, int machine,
                                const Vector& anchor,
                                const Vector& global_grad, double gamma);

// ---- inner-solve tolerance schedules ----

enum class ScheduleKind {
  kQuadraticDaneLS,  // mu^2 ||g|| / (2 (mu + 2 gamma) L)
  kGlobalDaneLS,     // rho (mu+gamma) / (2(L+gamma) + rho(mu+gamma)) * ||g||
  kLocalDaneLS,      // min{(gamma+mu)^2, ||g||^2/L^2, global-rule * ||g||}
  kQuadraticHB,      // geometric decay from ||g0||, see `tolerance`
  kHbLmOuter,        // sigma mu / (4 ell L^2) * ||g||^2
  kFixed,
};

struct ToleranceSchedule {
  ScheduleKind kind = ScheduleKind::kFixed;
  double L = 0;
  double mu = 0;
  double gamma = 0;
  double rho = 0;
  double sigma = 0;
  double ell = 0;
  double fixed_eps = 1e-10;
  // The analytic schedules vanish at a stationary point; the floor keeps the
  // inner solver's stopping rule well posed.
  double floor = 1e-14;
};

/// Evaluates the schedule at round t (1-based) given the gradient norm that
/// opened the round and the norm at the initial iterate. Throws ConfigError
/// when a needed constant is missing (non-positive where positivity is
/// required).
double tolerance(const ToleranceSchedule& schedule, int t,
                 double grad_norm_prev, double grad_norm_0);

// ---- inner solvers ----

struct SvrgConfig {
  double step_size = 0;      // must satisfy step_size * (L + gamma) <= 1
  Index epoch_length = 0;
  int max_epochs = 200;
  Seed rng_seed;
};

/// Standard defaults: step = 1 / (10 (L + gamma)), epoch length 2n.
SvrgConfig default_svrg_config(double L, double gamma, Index n, Seed seed);

struct SolveResult {
  Vector w;
  double achieved_grad_norm = 0;
  std::int64_t ifo_used = 0;  // epochs * (n + epoch_length)
  int epochs = 0;
  bool converged = false;
};

/// Variance-reduced stochastic solve of the subproblem to gradient norm
/// `eps`. Each epoch takes a full-gradient snapshot and then `epoch_length`
/// steps  w <- w - step (grad p_i(w) - grad p_i(w_snap) + grad P(w_snap));
/// convergence is certified by an exact full gradient at each epoch boundary.
/// Returns converged=false with the best iterate when max_epochs runs out.
/// The IFO bill is n + epoch_length per completed epoch (one index is drawn
/// per stochastic step; the entry certificate is free).
SolveResult solve_svrg(const Subproblem& sub, const Vector& w_init, double eps,
                       const SvrgConfig& cfg);

/// Exact minimizer of a quadratic subproblem: solves
/// (H1 + gamma I)(w - anchor) = -g by conjugate gradients to residual
/// 1e-12 * (1 + ||g||). Requires a constant local Hessian; throws
/// NumericError if CG fails to reach the tolerance.
Vector solve_direct(const Subproblem& sub);

}  // namespace dane

#endif  // DANE_SOLVER_HPP
