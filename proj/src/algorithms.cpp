#include "dane/algorithms.hpp"

#include <cmath>

namespace dane {
namespace {

constexpr double kMinEta = 0x1.0p-60;
constexpr double kMomentumFallbackEta = 0x1.0p-20;

void validate_config(const RunConfig& cfg) {
  if (cfg.gamma < 0) throw ConfigError("run config: gamma must be >= 0");
  if (cfg.max_rounds < 0) throw ConfigError("run config: negative max_rounds");
  if (cfg.line_search != LineSearchKind::kNone &&
      !(cfg.rho > 0 && cfg.rho < 1.0 / 3.0))
    throw ConfigError("run config: rho must lie in (0, 1/3)");
}

struct InnerSolve {
  Vector w;
  std::int64_t ifo = 0;
  bool ok = true;
  double achieved = 0;
};

Seed solver_stream(const RunConfig& cfg, int round, int machine) {
  return derive_seed(derive_seed(cfg.solver_seed,
                                 static_cast<std::uint64_t>(round)),
                     static_cast<std::uint64_t>(machine));
}

InnerSolve solve_inner(const Subproblem& sub, const Vector& warm, double eps,
                       const RunConfig& cfg, int round, int machine) {
  InnerSolve out;
  const bool direct = cfg.solver == SolverKind::kDirect ||
                      (cfg.solver == SolverKind::kAuto && sub.quadratic());
  if (direct) {
    // Exact quadratic solve; spends Hessian-vector products, which sit
    // outside the per-sample oracle model, so nothing is billed.
    out.w = solve_direct(sub);
    out.achieved = sub.gradient(out.w).norm();
    return out;
  }
  SvrgConfig scfg = default_svrg_config(cfg.profile.L, sub.gamma(),
                                        sub.samples(),
                                        solver_stream(cfg, round, machine));
  scfg.max_epochs = cfg.svrg_max_epochs;
  SolveResult res = solve_svrg(sub, warm, eps, scfg);
  out.w = res.w;
  out.ifo = res.ifo_used;
  out.ok = res.converged;
  out.achieved = res.achieved_grad_norm;
  return out;
}

Vector initial_point(Cluster& cluster, const RunConfig& cfg) {
  Vector w0 = Vector::Zero(cluster.dim());
  if (cfg.init == InitKind::kLocalArgmin) {
    // Approximate local minimizer on the master; no communication involved.
    const Objective& local = cluster.master_local_raw();
    Vector g0 = local.gradient(w0);
    cluster.charge_local_ifo(local.samples());
    Subproblem sub(&local, w0, g0, 0.0);
    double eps = 1e-8 * std::max(1.0, g0.norm());
    InnerSolve s = solve_inner(sub, w0, eps, cfg, 0, 1);
    cluster.charge_local_ifo(s.ifo);
    if (s.ok) w0 = s.w;
  }
  return w0;
}

RoundRecord snapshot(int t, const Vector& w, const Cluster& cluster) {
  RoundRecord rec;
  rec.t = t;
  rec.w = w;
  const Objective& global = cluster.global_view();
  rec.f_value = global.value(w);
  rec.grad_norm = global.gradient(w).norm();
  rec.ledger = cluster.ledger();
  return rec;
}

bool diagnostic_target_met(const StopTarget& target, const RoundRecord& rec) {
  switch (target.kind) {
    case StopTarget::Kind::kGradNorm:
      return false;  // handled against the reduced gradient at the loop top
    case StopTarget::Kind::kIterateError:
      return (rec.w - target.w_star).norm() <= target.eps;
    case StopTarget::Kind::kSuboptimality:
      return rec.f_value - target.f_star <= target.eps;
  }
  return false;
}

// Shared backtracking on the global value: accepts the largest eta = 2^-k
// with F(w_prev + eta * dir) <= f_prev - eta * (rho_a - eps_term).
// rho_a = rho * <grad F1(w~) - grad F1(w_prev) + gamma d~, d~> and
// eps_term = eps_t ||d~|| are eta-independent. Reduced objective values are
// only exact to a relative 1e-16 or so, which near a stationary point dwarfs
// the demanded decrease; the acceptance test carries a proportional slack so
// such vanishing steps cannot be rejected on round-off alone.
LineSearchResult backtrack_value(Cluster& cluster, const Vector& w_prev,
                                 const Vector& dir, double rho_a,
                                 double eps_term,
                                 std::optional<double> f_prev, double min_eta,
                                 bool allow_fallback) {
  LineSearchResult out;
  double f0;
  if (f_prev) {
    f0 = *f_prev;
  } else {
    f0 = cluster.reduce_value(w_prev);
    ++out.value_evals;
  }
  const double fp_slack = 64.0 * 2.220446049250313e-16 * (std::abs(f0) + 1.0);
  double eta = 1.0;
  while (true) {
    double f_trial = cluster.reduce_value(w_prev + eta * dir);
    ++out.value_evals;
    if (f_trial <= f0 - eta * (rho_a - eps_term) + fp_slack) {
      out.eta = eta;
      out.f_new = f_trial;
      return out;
    }
    eta *= 0.5;
    if (eta < min_eta) {
      if (allow_fallback) {
        out.eta = 1.0;
        out.fell_back = true;
        out.f_new = cluster.reduce_value(w_prev + dir);
        ++out.value_evals;
        return out;
      }
      throw NumericError(
          "line search rejected every step above 2^-60; the smoothness "
          "constants are likely wrong");
    }
  }
}

}  // namespace

std::int64_t RunTranscript::rounds_to_grad_norm(double eps) const {
  for (const auto& r : records)
    if (r.grad_norm <= eps) return r.ledger.rounds;
  return -1;
}

std::int64_t RunTranscript::rounds_to_iterate_error(
    double eps, const Vector& w_star) const {
  for (const auto& r : records)
    if ((r.w - w_star).norm() <= eps) return r.ledger.rounds;
  return -1;
}

std::int64_t RunTranscript::rounds_to_suboptimality(double eps,
                                                    double f_star) const {
  for (const auto& r : records)
    if (r.f_value - f_star <= eps) return r.ledger.rounds;
  return -1;
}

double momentum_beta(double mu, double gamma) {
  if (!(mu > 0)) throw ContractError("momentum_beta: mu must be positive");
  if (gamma < 0) throw ContractError("momentum_beta: gamma must be >= 0");
  double r = 1.0 - std::sqrt(mu / (mu + 2.0 * gamma));
  return r * r;
}

double psi(const Vector& w_tilde, const Vector& w_prev, double eta, double rho,
           double gamma, double eps_t, const Objective& local_view) {
  Vector d = w_tilde - w_prev;
  Vector g_diff = local_view.gradient(w_tilde) - local_view.gradient(w_prev);
  double inner = g_diff.dot(d) + gamma * d.squaredNorm();
  return eta * rho * inner - eta * eps_t * d.norm();
}

LineSearchResult line_search_option1(Cluster& cluster, const Vector& w_prev,
                                     const Vector& w_tilde, double rho,
                                     double gamma, double eps_t,
                                     std::optional<double> f_prev) {
  ChargedObjective local = cluster.master_local_view();
  Vector d = w_tilde - w_prev;
  Vector g_diff = local.gradient(w_tilde) - local.gradient(w_prev);
  double rho_a = rho * (g_diff.dot(d) + gamma * d.squaredNorm());
  double eps_term = eps_t * d.norm();
  return backtrack_value(cluster, w_prev, d, rho_a, eps_term, f_prev, kMinEta,
                         /*allow_fallback=*/false);
}

double line_search_option2(const Vector& w_prev, const Vector& w_tilde,
                           const Vector& global_grad_prev, double rho,
                           double gamma, double nu, double eps_t,
                           const Objective& local_view) {
  if (nu < 0) throw ContractError("line_search_option2: nu must be >= 0");
  Vector d = w_tilde - w_prev;
  const double dn = d.norm();
  if (dn == 0) return 1.0;
  Vector g_diff = local_view.gradient(w_tilde) - local_view.gradient(w_prev);
  const double rho_a = rho * (g_diff.dot(d) + gamma * d.squaredNorm());
  const double eps_term = eps_t * dn;
  const double slope = global_grad_prev.dot(d);
  const double quad =
      d.dot(local_view.hessian_vec(w_prev, d)) + gamma * d.squaredNorm();
  const double cubic = nu / 6.0 * dn * dn * dn;

  double eta = 1.0;
  while (true) {
    double lhs = eta * slope + eta * eta * quad + eta * eta * eta * cubic;
    double rhs = -(eta * (rho_a - eps_term));
    if (lhs <= rhs) return eta;
    eta *= 0.5;
    if (eta < kMinEta)
      throw NumericError(
          "local line search rejected every step above 2^-60; the smoothness "
          "constants are likely wrong");
  }
}

namespace {

RunTranscript run_master_loop(Cluster& cluster, const RunConfig& cfg,
                              bool heavy_ball,
                              const std::optional<Vector>& warm_start) {
  validate_config(cfg);
  const Objective& global = cluster.global_view();
  const bool quad = cluster.quadratic();

  RunTranscript out;
  Vector w = warm_start ? *warm_start : initial_point(cluster, cfg);
  Vector w_before = w;  // previous iterate for the momentum term
  const double beta =
      heavy_ball
          ? cfg.beta_override.value_or(momentum_beta(cfg.profile.mu, cfg.gamma))
          : 0.0;

  if (!quad && cfg.line_search == LineSearchKind::kOptionII &&
      cluster.dim() <= 256) {
    out.premise_warning = cluster.hessian_deviation(w) > cfg.gamma;
  }

  out.records.push_back(snapshot(0, w, cluster));
  out.status = TerminalStatus::kRoundLimit;

  double grad0 = 0;
  std::optional<double> f_prev;

  for (int t = 1; t <= cfg.max_rounds; ++t) {
    Vector g = cluster.reduce_gradient(w);
    const double gn = g.norm();
    if (t == 1) grad0 = gn;
    if (cfg.target.kind == StopTarget::Kind::kGradNorm &&
        gn <= cfg.target.eps) {
      out.status = TerminalStatus::kConverged;
      break;
    }

    const double eps_t = tolerance(cfg.schedule, t, gn, grad0);
    Subproblem sub = build_subproblem(cluster, w, g, cfg.gamma);
    InnerSolve inner = solve_inner(sub, w, eps_t, cfg, t, 1);
    cluster.charge_local_ifo(inner.ifo);
    if (!inner.ok) {
      out.status = TerminalStatus::kSolverFailure;
      break;
    }

    RoundRecord rec;
    rec.eps_t = eps_t;
    rec.inner_ifo = inner.ifo;
    rec.cert_residual = sub.gradient(inner.w).norm();
    rec.tilde_step_norm = (inner.w - w).norm();

    Vector candidate = inner.w;
    if (heavy_ball && beta != 0.0) candidate += beta * (w - w_before);

    Vector w_next;
    if (quad || cfg.line_search == LineSearchKind::kNone) {
      w_next = candidate;
    } else if (cfg.line_search == LineSearchKind::kOptionI || heavy_ball) {
      // The momentum safeguard also backtracks on the global value, along
      // the combined direction, but may fall back to the raw momentum step:
      // the difference vector has no guaranteed descent property.
      ChargedObjective local = cluster.master_local_view();
      Vector d_tilde = inner.w - w;
      Vector g_diff = local.gradient(inner.w) - local.gradient(w);
      double rho_a =
          cfg.rho * (g_diff.dot(d_tilde) + cfg.gamma * d_tilde.squaredNorm());
      double eps_term = eps_t * d_tilde.norm();
      Vector dir = candidate - w;
      try {
        LineSearchResult ls = backtrack_value(
            cluster, w, dir, rho_a, eps_term, f_prev,
            heavy_ball ? kMomentumFallbackEta : kMinEta, heavy_ball);
        rec.eta = ls.eta;
        rec.ls_value_evals = ls.value_evals;
        rec.momentum_fallback = ls.fell_back;
        f_prev = ls.f_new;
        w_next = ls.fell_back ? candidate : Vector(w + ls.eta * dir);
      } catch (const NumericError&) {
        out.status = TerminalStatus::kSolverFailure;
        break;
      }
    } else {  // Option-II, no communication
      try {
        double eta = line_search_option2(w, inner.w, g, cfg.rho, cfg.gamma,
                                         cfg.profile.nu, eps_t,
                                         cluster.master_local_view());
        rec.eta = eta;
        w_next = w + eta * (inner.w - w);
      } catch (const NumericError&) {
        out.status = TerminalStatus::kSolverFailure;
        break;
      }
    }

    w_before = w;
    w = w_next;

    rec.t = t;
    rec.w = w;
    rec.f_value = global.value(w);
    rec.grad_norm = global.gradient(w).norm();
    rec.ledger = cluster.ledger();
    out.records.push_back(std::move(rec));

    if (diagnostic_target_met(cfg.target, out.records.back())) {
      out.status = TerminalStatus::kConverged;
      break;
    }
  }
  return out;
}

}  // namespace

RunTranscript run_dane_ls(Cluster& cluster, const RunConfig& cfg) {
  return run_master_loop(cluster, cfg, /*heavy_ball=*/false, {});
}

RunTranscript run_dane_hb(Cluster& cluster, const RunConfig& cfg) {
  return run_master_loop(cluster, cfg, /*heavy_ball=*/true, {});
}

RunTranscript run_dane_hb_lm(Cluster& cluster, const RunConfig& cfg) {
  validate_config(cfg);

  RunTranscript out;
  Vector w = initial_point(cluster, cfg);
  out.records.push_back(snapshot(0, w, cluster));
  out.status = TerminalStatus::kRoundLimit;
  double grad0 = 0;

  for (int t = 1; t <= cfg.max_rounds; ++t) {
    Vector g = cluster.reduce_gradient(w);
    const double gn = g.norm();
    if (t == 1) grad0 = gn;
    if (cfg.target.kind == StopTarget::Kind::kGradNorm &&
        gn <= cfg.target.eps) {
      out.status = TerminalStatus::kConverged;
      break;
    }

    const double eps_t = tolerance(cfg.schedule, t, gn, grad0);
    Cluster model_cluster =
        cluster.make_surrogate_cluster(w, cfg.profile.ell, g);

    // Drive the quadratic model to suboptimality eps_t; since the model is
    // mu-strongly convex, ||grad Q|| <= sqrt(2 mu eps_t) certifies the gap.
    RunConfig inner = cfg;
    inner.algorithm = AlgorithmKind::kDaneHB;
    inner.line_search = LineSearchKind::kNone;
    inner.init = InitKind::kZero;  // unused: warm start below
    inner.schedule.kind = ScheduleKind::kQuadraticHB;
    inner.schedule.L = cfg.profile.L;
    inner.schedule.mu = cfg.profile.mu;
    inner.schedule.gamma = cfg.gamma;
    inner.target =
        StopTarget::grad_norm(std::sqrt(2.0 * cfg.profile.mu * eps_t));
    inner.max_rounds = cfg.inner_max_rounds;
    inner.solver_seed =
        derive_seed(cfg.solver_seed, static_cast<std::uint64_t>(t));

    const std::int64_t rounds_before = cluster.ledger().rounds;
    RunTranscript inner_run =
        run_master_loop(model_cluster, inner, /*heavy_ball=*/true, w);
    if (inner_run.status != TerminalStatus::kConverged) {
      out.status = TerminalStatus::kSolverFailure;
      break;
    }
    w = inner_run.last().w;

    RoundRecord rec = snapshot(t, w, cluster);
    rec.eps_t = eps_t;
    rec.inner_rounds = cluster.ledger().rounds - rounds_before;
    for (const auto& r : inner_run.records) rec.inner_ifo += r.inner_ifo;
    rec.cert_residual = inner_run.last().cert_residual;
    out.records.push_back(std::move(rec));

    if (diagnostic_target_met(cfg.target, out.records.back())) {
      out.status = TerminalStatus::kConverged;
      break;
    }
  }
  return out;
}

RunTranscript run_inexact_dane(Cluster& cluster, const RunConfig& cfg) {
  validate_config(cfg);
  const Objective& global = cluster.global_view();
  const int m = cluster.machine_count();

  RunTranscript out;
  Vector w = initial_point(cluster, cfg);
  out.records.push_back(snapshot(0, w, cluster));
  out.status = TerminalStatus::kRoundLimit;
  double grad0 = 0;

  for (int t = 1; t <= cfg.max_rounds; ++t) {
    Vector g = cluster.reduce_gradient(w);
    const double gn = g.norm();
    if (t == 1) grad0 = gn;
    if (cfg.target.kind == StopTarget::Kind::kGradNorm &&
        gn <= cfg.target.eps) {
      out.status = TerminalStatus::kConverged;
      break;
    }

    const double eps_t = tolerance(cfg.schedule, t, gn, grad0);
    RoundRecord rec;
    rec.eps_t = eps_t;

    Vector acc = Vector::Zero(cluster.dim());
    bool failed = false;
    for (int j = 0; j < m; ++j) {
      Subproblem sub = build_subproblem_for(cluster, j, w, g, cfg.gamma);
      InnerSolve inner = solve_inner(sub, w, eps_t, cfg, t, j + 1);
      cluster.charge_local_ifo(inner.ifo);
      rec.inner_ifo += inner.ifo;
      rec.cert_residual =
          std::max(rec.cert_residual, sub.gradient(inner.w).norm());
      if (!inner.ok) {
        failed = true;
        break;
      }
      acc += inner.w;
    }
    if (failed) {
      out.status = TerminalStatus::kSolverFailure;
      break;
    }
    w = acc / static_cast<double>(m);
    cluster.charge_model_average_round();

    rec.t = t;
    rec.w = w;
    rec.f_value = global.value(w);
    rec.grad_norm = global.gradient(w).norm();
    rec.ledger = cluster.ledger();
    out.records.push_back(std::move(rec));

    if (diagnostic_target_met(cfg.target, out.records.back())) {
      out.status = TerminalStatus::kConverged;
      break;
    }
  }
  return out;
}

RunTranscript run_gd(Cluster& cluster, const RunConfig& cfg) {
  validate_config(cfg);
  if (!(cfg.profile.L > 0)) throw ConfigError("run_gd: profile.L must be set");
  const double step = 1.0 / cfg.profile.L;

  RunTranscript out;
  Vector w = initial_point(cluster, cfg);
  out.records.push_back(snapshot(0, w, cluster));
  out.status = TerminalStatus::kRoundLimit;

  for (int t = 1; t <= cfg.max_rounds; ++t) {
    Vector g = cluster.reduce_gradient(w);
    if (cfg.target.kind == StopTarget::Kind::kGradNorm &&
        g.norm() <= cfg.target.eps) {
      out.status = TerminalStatus::kConverged;
      break;
    }
    w -= step * g;
    RoundRecord rec = snapshot(t, w, cluster);
    rec.eta = step;
    out.records.push_back(std::move(rec));
    if (diagnostic_target_met(cfg.target, out.records.back())) {
      out.status = TerminalStatus::kConverged;
      break;
    }
  }
  return out;
}

RunTranscript run_algorithm(Cluster& cluster, const RunConfig& cfg) {
  switch (cfg.algorithm) {
    case AlgorithmKind::kDaneLS:
      return run_dane_ls(cluster, cfg);
    case AlgorithmKind::kDaneHB:
      return run_dane_hb(cluster, cfg);
    case AlgorithmKind::kDaneHBLM:
      return run_dane_hb_lm(cluster, cfg);
    case AlgorithmKind::kInexactDane:
      return run_inexact_dane(cluster, cfg);
    case AlgorithmKind::kGradientDescent:
      return run_gd(cluster, cfg);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace dane
