#include "dane/solver.hpp"

#include <cmath>

namespace dane {

Subproblem::Subproblem(const Objective* local, Vector anchor,
                       Vector global_grad, double gamma)
    : local_(local),
      anchor_(std::move(anchor)),
      global_grad_(std::move(global_grad)),
      gamma_(gamma) {
  if (gamma_ < 0) throw ContractError("subproblem: gamma must be >= 0");
  if (anchor_.size() != local_->dim() || global_grad_.size() != local_->dim())
    throw ContractError("subproblem: dimension mismatch");
  correction_ = global_grad_ - local_->gradient(anchor_);
}

double Subproblem::value(const Vector& w) const {
  return local_->value(w) + correction_.dot(w) +
         0.5 * gamma_ * (w - anchor_).squaredNorm();
}

Vector Subproblem::gradient(const Vector& w) const {
  Vector g = local_->gradient(w);
  g.noalias() += correction_;
  g.noalias() += gamma_ * (w - anchor_);
  return g;
}

Vector Subproblem::hessian_vec(const Vector& w, const Vector& v) const {
  Vector h = local_->hessian_vec(w, v);
  h.noalias() += gamma_ * v;
  return h;
}

void Subproblem::add_sample_gradient(Index k, const Vector& w, double scale,
                                     Vector& out) const {
  local_->add_sample_gradient(k, w, scale, out);
  out.noalias() += scale * correction_;
  out.noalias() += scale * gamma_ * (w - anchor_);
}

Subproblem build_subproblem(const Cluster& cluster, const Vector& anchor,
                            const Vector& global_grad, double gamma) {
  return Subproblem(&cluster.master_local_raw(), anchor, global_grad, gamma);
}

Subproblem build_subproblem_for(const Cluster& cluster, int machine,
                                const Vector& anchor,
                                const Vector& global_grad, double gamma) {
  return Subproblem(&cluster.worker_raw(machine), anchor, global_grad, gamma);
}

namespace {

double require_positive(double v, const char* name) {
  if (!(v > 0))
    throw ConfigError(std::string("tolerance schedule: missing or "
                                  "non-positive constant ") +
                      name);
  return v;
}

double global_ls_ratio(const ToleranceSchedule& s) {
  double mu = require_positive(s.mu, "mu");
  double L = require_positive(s.L, "L");
  double rho = require_positive(s.rho, "rho");
  if (s.gamma < 0) throw ConfigError("tolerance schedule: negative gamma");
  return rho * (mu + s.gamma) /
         (2.0 * (L + s.gamma) + rho * (mu + s.gamma));
}

}  // namespace

double tolerance(const ToleranceSchedule& s, int t, double grad_norm_prev,
                 double grad_norm_0) {
  if (grad_norm_prev < 0) throw ContractError("negative gradient norm");
  double eps = 0;
  switch (s.kind) {
    case ScheduleKind::kQuadraticDaneLS: {
      double mu = require_positive(s.mu, "mu");
      double L = require_positive(s.L, "L");
      if (s.gamma < 0) throw ConfigError("tolerance schedule: negative gamma");
      eps = mu * mu * grad_norm_prev / (2.0 * (mu + 2.0 * s.gamma) * L);
      break;
    }
    case ScheduleKind::kGlobalDaneLS:
      eps = global_ls_ratio(s) * grad_norm_prev;
      break;
    case ScheduleKind::kLocalDaneLS: {
      double L = require_positive(s.L, "L");
      double gm = require_positive(s.gamma + s.mu, "gamma+mu");
      eps = std::min({gm * gm,
                      grad_norm_prev * grad_norm_prev / (L * L),
                      global_ls_ratio(s) * grad_norm_prev});
      break;
    }
    case ScheduleKind::kQuadraticHB: {
      double mu = require_positive(s.mu, "mu");
      double L = require_positive(s.L, "L");
      if (s.gamma < 0) throw ConfigError("tolerance schedule: negative gamma");
      if (t < 1) throw ContractError("schedule round index must be >= 1");
      double decay = 1.0 - 0.5 * std::sqrt(mu / (mu + 2.0 * s.gamma));
      double tt = static_cast<double>(t);
      eps = std::sqrt(2.0) * (mu + s.gamma) * grad_norm_0 /
            (2.0 * L * (tt + 1.0) * (tt + 1.0)) * std::pow(decay, tt + 1.0);
      break;
    }
    case ScheduleKind::kHbLmOuter: {
      double mu = require_positive(s.mu, "mu");
      double L = require_positive(s.L, "L");
      double sigma = require_positive(s.sigma, "sigma");
      double ell = require_positive(s.ell, "ell");
      eps = sigma * mu / (4.0 * ell * L * L) * grad_norm_prev * grad_norm_prev;
      break;
    }
    case ScheduleKind::kFixed:
      eps = require_positive(s.fixed_eps, "fixed_eps");
      break;
  }
  return std::max(eps, s.floor);
}

SvrgConfig default_svrg_config(double L, double gamma, Index n, Seed seed) {
  if (!(L > 0)) throw ConfigError("svrg defaults: L must be positive");
  if (gamma < 0) throw ConfigError("svrg defaults: negative gamma");
  SvrgConfig cfg;
  cfg.step_size = 1.0 / (10.0 * (L + gamma));
  cfg.epoch_length = 2 * n;
  cfg.max_epochs = 200;
  cfg.rng_seed = seed;
  return cfg;
}

SolveResult solve_svrg(const Subproblem& sub, const Vector& w_init, double eps,
                       const SvrgConfig& cfg) {
  if (!(eps > 0)) throw ContractError("solve_svrg: eps must be positive");
  if (!(cfg.step_size > 0) || cfg.epoch_length < 1)
    throw ConfigError("solve_svrg: bad step size or epoch length");
  const Index n = sub.samples();
  Rng rng(cfg.rng_seed);

  SolveResult res;
  res.w = w_init;
  Vector g = sub.gradient(res.w);  // entry certificate, not billed
  res.achieved_grad_norm = g.norm();

  Vector step(sub.dim());
  while (res.achieved_grad_norm > eps) {
    if (res.epochs == cfg.max_epochs) return res;  // converged stays false
    const Vector w_snap = res.w;
    const Vector g_snap = g;  // exact grad P at the snapshot
    for (Index k = 0; k < cfg.epoch_length; ++k) {
      Index i = rng.bounded(n);
      step = g_snap;
      sub.add_sample_gradient(i, res.w, 1.0, step);
      sub.add_sample_gradient(i, w_snap, -1.0, step);
      res.w.noalias() -= cfg.step_size * step;
    }
    ++res.epochs;
    res.ifo_used += n + cfg.epoch_length;
    g = sub.gradient(res.w);  // boundary certificate / next snapshot
    res.achieved_grad_norm = g.norm();
  }
  res.converged = true;
  return res;
}

Vector solve_direct(const Subproblem& sub) {
  if (!sub.quadratic())
    throw ContractError("solve_direct requires a quadratic local objective");
  const Vector& anchor = sub.anchor();
  const Vector rhs = -sub.global_grad();
  const double tol = 1e-12 * (1.0 + rhs.norm());

  auto apply = [&](const Vector& v) { return sub.hessian_vec(anchor, v); };

  Vector d = Vector::Zero(sub.dim());
  Vector r = rhs;  // residual of (H1 + gamma I) d = rhs at d = 0
  Vector p = r;
  double rs = r.squaredNorm();
  const long max_iter = std::max<long>(100, 6 * sub.dim());
  for (long it = 0; it < max_iter; ++it) {
    if (std::sqrt(rs) <= tol) return anchor + d;
    Vector ap = apply(p);
    double denom = p.dot(ap);
    if (!(denom > 0))
      throw NumericError("conjugate gradient: operator not positive definite");
    double alpha = rs / denom;
    d.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    double rs_next = r.squaredNorm();
    p = r + (rs_next / rs) * p;
    rs = rs_next;
  }
  if (std::sqrt(rs) <= tol) return anchor + d;
  throw NumericError("conjugate gradient stagnated before reaching tolerance");
}

}  // namespace dane
