#ifndef DANE_ORACLES_HPP
#define DANE_ORACLES_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dane/cluster.hpp"

namespace dane {

/// Statistically safe proximal strength: L * sqrt(32 log(p/delta) / n).
/// With n local samples per machine, the local Hessian deviates from the
/// global one by at most this value with probability 1 - delta.
double recommended_gamma(double L, Index p, Index n, double delta);

// ---- closed-form and dense-algebra audits of the supporting lemmas ----

/// Eigenvalue facts about (A + gamma I)^{-1} B for symmetric positive
/// definite A, B with ||A - B|| <= gamma and B >= mu I (mu measured from B):
/// all eigenvalues lie in [mu/(mu+2gamma), 1], and
/// ||I - B^{1/2} (A+gamma I)^{-1} B^{1/2}|| <= 2 gamma / (mu + 2 gamma).
struct PreconditionReport {
  double mu = 0;
  double lambda_min = 0;
  double lambda_max = 0;
  double norm_term = 0;   // ||I - B^{1/2}(A+gamma I)^{-1}B^{1/2}||
  double lambda_floor = 0;
  double norm_cap = 0;
  bool ok = false;
};
/// Dense eigendecomposition check; throws ContractError when the premise
/// ||A - B|| <= gamma fails.
PreconditionReport precondition_bounds_check(const Matrix& A, const Matrix& B,
                                             double gamma);

/// Spectral radius of the heavy-ball companion blocks
/// [[1 + beta - eta*lambda, -beta], [1, 0]] over the given eigenvalues,
/// against the bound max{|1-sqrt(eta mu)|, |1-sqrt(eta L)|} (mu, L the
/// extreme eigenvalues; beta must equal the squared bound).
struct HeavyBallReport {
  double max_radius = 0;
  double bound = 0;
  bool ok = false;
};
HeavyBallReport heavy_ball_radius_check(const std::vector<double>& eigenvalues,
                                        double eta, double beta);

/// Second-order Taylor remainder bound under a Lipschitz Hessian:
/// ||grad F(w) - grad F(w') - hess F(w')(w - w')|| <= nu/2 ||w - w'||^2.
struct TaylorRemainderReport {
  int checked = 0;
  int violations = 0;
  double worst_excess = 0;  // most positive lhs - rhs over the pairs
  bool ok = false;
};
TaylorRemainderReport lipschitz_hessian_check(
    const LossModel& model, const LabeledDataset& data,
    const std::vector<std::pair<Vector, Vector>>& pairs);

/// Consequences of an inexact local solve when the local and global Hessians
/// stay gamma-close:  ||grad F(w~)|| <= 2 gamma ||w~ - w_prev|| + eps_t, and
/// ||w~ - w*|| <= (2 gamma / mu) ||w~ - w_prev|| + eps_t / mu.
/// The premise is sampled at both endpoints; when it fails the checks are
/// skipped and reported as such.
struct GradBoundReport {
  bool premise_ok = false;
  double deviation_at_tilde = 0;
  double deviation_at_prev = 0;
  bool gradient_bound_ok = false;
  bool iterate_bound_ok = false;  // true when not checked
  bool ok = false;
};
GradBoundReport grad_bound_check(const Cluster& cluster, const Vector& w_tilde,
                                 const Vector& w_prev, double eps_t,
                                 double gamma,
                                 const std::optional<Vector>& w_star = {});

// ---- closed-form round budgets ----

enum class TheoremBound { kT1, kT3Local, kT5, kT6, kT7 };

/// Constants a bound may need; leave unused ones NaN.
struct RateConstants {
  double L = std::numeric_limits<double>::quiet_NaN();
  double mu = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double nu = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double ell = std::numeric_limits<double>::quiet_NaN();
  double c = std::numeric_limits<double>::quiet_NaN();      // kT5/kT6 prefactor
  double dist0 = std::numeric_limits<double>::quiet_NaN();  // ||w0 - w*||
  double gap0 = std::numeric_limits<double>::quiet_NaN();   // F(w0) - F*
};

struct RateBound {
  TheoremBound theorem;
  double rounds = 0;  // clamped at 0; natural logs throughout
  RateConstants constants_used;
};

/// Evaluates the cited closed-form round budget for precision eps.
/// Throws ConfigError when a required constant is missing.
RateBound round_bound(TheoremBound theorem, const RateConstants& constants,
                      double eps);

// ---- independent differentiation oracle ----

/// Central differences per coordinate: (F(w + h e_i) - F(w - h e_i)) / (2h).
Vector fd_gradient(const LossModel& model, const LabeledDataset& data,
                   const Vector& w, double h);

// ---- seeded randomized audit drivers ----

struct AuditSummary {
  std::string name;
  int instances = 0;
  int violations = 0;
  std::string detail;
  bool ok() const { return violations == 0; }
  std::string to_string() const;
};

AuditSummary audit_precondition_bounds(int instances, Seed seed);
AuditSummary audit_heavy_ball_radius(int instances, Seed seed);
AuditSummary audit_lipschitz_hessian(int pair_checks, Seed seed);

/// Random even splits of ridge data; measures how often the master/global
/// Hessian deviation stays within recommended_gamma. `violations` counts
/// splits beyond the 10% failure allowance only if the overall fraction
/// drops below `min_fraction`.
struct ConcentrationSummary {
  int splits = 0;
  int within = 0;
  double fraction = 0;
  double min_fraction = 0.9;
  bool ok() const { return fraction >= min_fraction; }
  std::string to_string() const;
};
ConcentrationSummary audit_hessian_concentration(int splits, int machines,
                                                 Index n_local, Index p,
                                                 double delta, Seed seed);

}  // namespace dane

#endif  // DANE_ORACLES_HPP
