#include "dane/oracles.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

namespace dane {
namespace {

double spectral_norm(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double require_constant(double v, const char* name) {
  if (std::isnan(v))
    throw ConfigError(std::string("round_bound: missing constant ") + name);
  return v;
}

}  // namespace

double recommended_gamma(double L, Index p, Index n, double delta) {
  if (!(delta > 0 && delta < 1))
    throw ContractError("recommended_gamma: delta must lie in (0,1)");
  if (n < 1 || p < 1) throw ContractError("recommended_gamma: need n,p >= 1");
  return L * std::sqrt(32.0 * std::log(static_cast<double>(p) / delta) /
                       static_cast<double>(n));
}

PreconditionReport precondition_bounds_check(const Matrix& A, const Matrix& B,
                                             double gamma) {
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
    throw ContractError("precondition_bounds_check: square matrices required");
  if (gamma < 0) throw ContractError("precondition_bounds_check: gamma < 0");

  Eigen::SelfAdjointEigenSolver<Matrix> eig_b(B);
  const double mu = eig_b.eigenvalues().minCoeff();
  if (!(mu > 0))
    throw ContractError("precondition_bounds_check: B is not positive definite");
  const double deviation = spectral_norm(A - B);
  if (deviation > gamma * (1.0 + 1e-12) + 1e-15)
    throw ContractError("precondition_bounds_check: ||A - B|| exceeds gamma");

  const Index p = A.rows();
  Matrix shifted = A + gamma * Matrix::Identity(p, p);

  // Eigenvalues of (A + gamma I)^{-1} B equal those of C^{-1} B C^{-T} with
  // C the Cholesky factor of the shift.
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success)
    throw ContractError("precondition_bounds_check: A + gamma I not PD");
  Matrix l = llt.matrixL();
  Matrix congruent =
      l.triangularView<Eigen::Lower>().solve(Matrix(
          l.triangularView<Eigen::Lower>().solve(B).transpose()));
  Eigen::SelfAdjointEigenSolver<Matrix> eig_m(congruent,
                                              Eigen::EigenvaluesOnly);

  // ||I - B^{1/2} (A + gamma I)^{-1} B^{1/2}|| via the dense square root.
  Matrix b_sqrt = eig_b.eigenvectors() *
                  eig_b.eigenvalues().cwiseSqrt().asDiagonal() *
                  eig_b.eigenvectors().transpose();
  Matrix t = Matrix::Identity(p, p) - b_sqrt * shifted.llt().solve(b_sqrt);

  PreconditionReport rep;
  rep.mu = mu;
  rep.lambda_min = eig_m.eigenvalues().minCoeff();
  rep.lambda_max = eig_m.eigenvalues().maxCoeff();
  rep.norm_term = spectral_norm(t);
  rep.lambda_floor = mu / (mu + 2.0 * gamma);
  rep.norm_cap = 2.0 * gamma / (mu + 2.0 * gamma);
  rep.ok = rep.lambda_max <= 1.0 + 1e-10 &&
           rep.lambda_min >= rep.lambda_floor - 1e-10 &&
           rep.norm_term <= rep.norm_cap + 1e-10;
  return rep;
}

HeavyBallReport heavy_ball_radius_check(const std::vector<double>& eigenvalues,
                                        double eta, double beta) {
  if (eigenvalues.empty())
    throw ContractError("heavy_ball_radius_check: no eigenvalues");
  if (!(eta > 0)) throw ContractError("heavy_ball_radius_check: eta <= 0");
  double lo = eigenvalues.front(), hi = eigenvalues.front();
  for (double v : eigenvalues) {
    if (!(v > 0))
      throw ContractError("heavy_ball_radius_check: eigenvalues must be > 0");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double bound = std::max(std::abs(1.0 - std::sqrt(eta * lo)),
                                std::abs(1.0 - std::sqrt(eta * hi)));
  if (std::abs(beta - bound * bound) > 1e-9 * std::max(1.0, bound * bound))
    throw ContractError(
        "heavy_ball_radius_check: beta must equal the squared radius bound");

  HeavyBallReport rep;
  rep.bound = bound;
  for (double lambda : eigenvalues) {
    // roots of z^2 - (1 + beta - eta*lambda) z + beta = 0
    const double b = 1.0 + beta - eta * lambda;
    const double disc = b * b - 4.0 * beta;
    // A discriminant within round-off of zero is a double root; taking its
    // square root would amplify 1e-16 noise to 1e-8 in the radius.
    const double disc_noise = 8.0 * 2.220446049250313e-16 *
                              (b * b + 4.0 * beta);
    double radius;
    if (disc > disc_noise) {
      const double root = std::sqrt(disc);
      radius = std::max(std::abs(0.5 * (b + root)), std::abs(0.5 * (b - root)));
    } else {
      radius = std::sqrt(beta);  // complex pair or double root, |z| = sqrt(beta)
    }
    rep.max_radius = std::max(rep.max_radius, radius);
  }
  rep.ok = rep.max_radius <= rep.bound + 1e-12;
  return rep;
}

TaylorRemainderReport lipschitz_hessian_check(
    const LossModel& model, const LabeledDataset& data,
    const std::vector<std::pair<Vector, Vector>>& pairs) {
  // L is irrelevant here; skip its power iteration.
  SmoothnessProfile prof = smoothness_profile(model, data, 1.0);
  ErmObjective f(&data, model);

  TaylorRemainderReport rep;
  for (const auto& [w, w_prime] : pairs) {
    Vector d = w - w_prime;
    double lhs =
        (f.gradient(w) - f.gradient(w_prime) - f.hessian_vec(w_prime, d))
            .norm();
    double rhs = 0.5 * prof.nu * d.squaredNorm() + 1e-10;
    ++rep.checked;
    if (lhs > rhs) ++rep.violations;
    rep.worst_excess = std::max(rep.worst_excess, lhs - rhs);
  }
  rep.ok = rep.violations == 0;
  return rep;
}

GradBoundReport grad_bound_check(const Cluster& cluster, const Vector& w_tilde,
                                 const Vector& w_prev, double eps_t,
                                 double gamma,
                                 const std::optional<Vector>& w_star) {
  GradBoundReport rep;
  rep.deviation_at_tilde = cluster.hessian_deviation(w_tilde);
  rep.deviation_at_prev = cluster.hessian_deviation(w_prev);
  rep.premise_ok = rep.deviation_at_tilde <= gamma + 1e-12 &&
                   rep.deviation_at_prev <= gamma + 1e-12;
  if (!rep.premise_ok) {
    rep.iterate_bound_ok = true;
    return rep;  // logged as skipped; ok stays false
  }
  const double step = (w_tilde - w_prev).norm();
  const double grad = cluster.global_view().gradient(w_tilde).norm();
  rep.gradient_bound_ok = grad <= 2.0 * gamma * step + eps_t + 1e-9;
  rep.iterate_bound_ok = true;
  if (w_star) {
    const double mu = cluster.model().reg_mu;
    rep.iterate_bound_ok =
        (w_tilde - *w_star).norm() <=
        (2.0 * gamma / mu) * step + eps_t / mu + 1e-9;
  }
  rep.ok = rep.gradient_bound_ok && rep.iterate_bound_ok;
  return rep;
}

RateBound round_bound(TheoremBound theorem, const RateConstants& k,
                      double eps) {
  if (!(eps > 0)) throw ContractError("round_bound: eps must be positive");
  RateBound out;
  out.theorem = theorem;
  out.constants_used = k;
  double rounds = 0;
  switch (theorem) {
    case TheoremBound::kT1: {
      double mu = require_constant(k.mu, "mu");
      double gamma = require_constant(k.gamma, "gamma");
      double L = require_constant(k.L, "L");
      double dist0 = require_constant(k.dist0, "dist0");
      double kappa = L / mu;
      rounds = 2.0 * (mu + 2.0 * gamma) / mu *
               std::log(std::sqrt(kappa) * dist0 / eps);
      break;
    }
    case TheoremBound::kT3Local: {
      double mu = require_constant(k.mu, "mu");
      double gamma = require_constant(k.gamma, "gamma");
      double L = require_constant(k.L, "L");
      double nu = require_constant(k.nu, "nu");
      double kappa = L / mu;
      double tau =
          std::ceil((mu + 2.0 * gamma) / (2.0 * mu) * std::log(4.0 * kappa));
      rounds = 4.0 * tau *
               std::log((gamma + mu) /
                        (4.0 * (6.0 * nu + 1.0) * std::sqrt(kappa) * tau * eps));
      break;
    }
    case TheoremBound::kT5: {
      double mu = require_constant(k.mu, "mu");
      double gamma = require_constant(k.gamma, "gamma");
      double c = require_constant(k.c, "c");
      double dist0 = require_constant(k.dist0, "dist0");
      rounds = 2.0 * std::sqrt((mu + 2.0 * gamma) / mu) *
               std::log(2.0 * std::sqrt(2.0) * c * dist0 / eps);
      break;
    }
    case TheoremBound::kT6: {
      double mu = require_constant(k.mu, "mu");
      double gamma = require_constant(k.gamma, "gamma");
      double c = require_constant(k.c, "c");
      double nu = require_constant(k.nu, "nu");
      double tau = std::ceil(2.0 * std::sqrt((mu + 2.0 * gamma) / mu) *
                             std::log(2.0 * c));
      rounds = 4.0 * tau *
               std::log((gamma + mu) / (4.0 * (6.0 * nu + 1.0) * c * tau * eps));
      break;
    }
    case TheoremBound::kT7: {
      double ell = require_constant(k.ell, "ell");
      double sigma = require_constant(k.sigma, "sigma");
      double gap0 = require_constant(k.gap0, "gap0");
      rounds = ell / sigma * std::log(2.0 * gap0 / eps);
      break;
    }
  }
  out.rounds = std::max(0.0, rounds);
  return out;
}

Vector fd_gradient(const LossModel& model, const LabeledDataset& data,
                   const Vector& w, double h) {
  if (!(h > 0)) throw ContractError("fd_gradient: h must be positive");
  Vector g(w.size());
  Vector probe = w;
  for (Index i = 0; i < w.size(); ++i) {
    probe[i] = w[i] + h;
    double up = value(model, data, probe);
    probe[i] = w[i] - h;
    double down = value(model, data, probe);
    probe[i] = w[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

std::string AuditSummary::to_string() const {
  std::ostringstream os;
  os << name << ": instances=" << instances << " violations=" << violations
     << (ok() ? " [ok]" : " [FAILED]");
  if (!detail.empty()) os << " " << detail;
  return os.str();
}

std::string ConcentrationSummary::to_string() const {
  std::ostringstream os;
  os << "hessian_concentration: splits=" << splits << " within=" << within
     << " fraction=" << fraction << " (need >= " << min_fraction << ")"
     << (ok() ? " [ok]" : " [FAILED]");
  return os.str();
}

AuditSummary audit_precondition_bounds(int instances, Seed seed) {
  AuditSummary out;
  out.name = "precondition_bounds";
  Rng rng(seed);
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < instances; ++i) {
    const Index p = 2 + rng.bounded(31);  // p <= 32
    Matrix g(p, p);
    for (Index r = 0; r < p; ++r)
      for (Index c = 0; c < p; ++c) g(r, c) = rng.normal();
    Matrix b = g * g.transpose() / static_cast<double>(p) +
               (0.05 + rng.uniform()) * Matrix::Identity(p, p);

    Eigen::SelfAdjointEigenSolver<Matrix> eig_b(b, Eigen::EigenvaluesOnly);
    const double mu = eig_b.eigenvalues().minCoeff();

    // symmetric perturbation with spectral norm <= 0.9 mu keeps A PD
    Matrix r(p, p);
    for (Index rr = 0; rr < p; ++rr)
      for (Index cc = 0; cc < p; ++cc) r(rr, cc) = rng.normal();
    Matrix s = 0.5 * (r + r.transpose());
    const double scale = (0.9 * mu * rng.uniform()) / spectral_norm(s);
    Matrix a = b + scale * s;
    const double deviation = spectral_norm(a - b);
    const double gamma = deviation * (1.0 + rng.uniform());

    PreconditionReport rep = precondition_bounds_check(a, b, gamma);
    ++out.instances;
    if (!rep.ok) ++out.violations;
    worst_margin = std::min(worst_margin, rep.lambda_min - rep.lambda_floor);
  }
  std::ostringstream os;
  os << "worst lambda_min margin=" << worst_margin;
  out.detail = os.str();
  return out;
}

AuditSummary audit_heavy_ball_radius(int instances, Seed seed) {
  AuditSummary out;
  out.name = "heavy_ball_radius";
  Rng rng(seed);
  for (int i = 0; i < instances; ++i) {
    const double mu = 0.05 + rng.uniform();
    const double L = mu * (1.0 + 8.0 * rng.uniform());
    // The complex-root argument needs eta (sqrt(L) - sqrt(mu))^2 <= 4 (the
    // classic heavy-ball stability region; eta = 1 with eigenvalues in (0,1]
    // always qualifies). Sample inside it.
    const double eta_cap = 4.0 / std::pow(std::sqrt(L) - std::sqrt(mu), 2.0);
    const double eta = (0.01 + 0.99 * rng.uniform()) *
                       std::min(eta_cap, 4.0 / L);
    std::vector<double> eigs{mu, L};
    const Index extra = rng.bounded(20);
    for (Index j = 0; j < extra; ++j)
      eigs.push_back(mu + (L - mu) * rng.uniform());
    const double bound = std::max(std::abs(1.0 - std::sqrt(eta * mu)),
                                  std::abs(1.0 - std::sqrt(eta * L)));
    HeavyBallReport rep = heavy_ball_radius_check(eigs, eta, bound * bound);
    ++out.instances;
    if (!rep.ok) ++out.violations;
  }
  return out;
}

AuditSummary audit_lipschitz_hessian(int pair_checks, Seed seed) {
  AuditSummary out;
  out.name = "lipschitz_hessian";
  Rng rng(seed);
  const int pairs_per_dataset = 20;
  double worst = -std::numeric_limits<double>::infinity();
  while (out.instances < pair_checks) {
    const Index n = 30 + rng.bounded(50);
    const Index p = 3 + rng.bounded(10);
    GeneratedDataset gen =
        gen_logistic(n, p, Seed{rng.next_u64()});
    LossModel model{LossKind::kLogisticL2, 0.1 * (0.1 + rng.uniform()), 10.0};

    std::vector<std::pair<Vector, Vector>> pairs;
    for (int k = 0; k < pairs_per_dataset && out.instances + k < pair_checks;
         ++k) {
      Vector w(p), w2(p);
      for (Index j = 0; j < p; ++j) {
        w[j] = rng.normal();
        w2[j] = rng.normal();
      }
      // keep both points inside the unit ball
      if (w.norm() > 1) w /= w.norm() * (1.0 + rng.uniform());
      if (w2.norm() > 1) w2 /= w2.norm() * (1.0 + rng.uniform());
      pairs.emplace_back(w, w2);
    }
    TaylorRemainderReport rep =
        lipschitz_hessian_check(model, gen.data, pairs);
    out.instances += rep.checked;
    out.violations += rep.violations;
    worst = std::max(worst, rep.worst_excess);
  }
  std::ostringstream os;
  os << "worst excess=" << worst;
  out.detail = os.str();
  return out;
}

ConcentrationSummary audit_hessian_concentration(int splits, int machines,
                                                 Index n_local, Index p,
                                                 double delta, Seed seed) {
  ConcentrationSummary out;
  out.splits = splits;
  const Index n_total = static_cast<Index>(machines) * n_local;
  for (int i = 0; i < splits; ++i) {
    Seed split_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    GeneratedDataset gen = gen_ridge(n_total, p, 0.1, split_seed);
    auto data = std::make_shared<LabeledDataset>(std::move(gen.data));
    LossModel model{LossKind::kRidgeQuadratic, 0.0, 10.0};
    Cluster cluster(data, model,
                    partition_even(*data, machines,
                                   derive_seed(split_seed, 17u)));
    SmoothnessProfile prof = smoothness_profile(model, *data);
    const double gamma = recommended_gamma(prof.L, p, n_local, delta);
    const double dev = cluster.hessian_deviation(Vector::Zero(p));
    if (dev <= gamma) ++out.within;
  }
  out.fraction = static_cast<double>(out.within) / splits;
  return out;
}

}  // namespace dane
