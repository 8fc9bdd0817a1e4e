#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <memory>

#include "dane/algorithms.hpp"
#include "dane/oracles.hpp"

using namespace dane;

namespace {

struct Instance {
  std::shared_ptr<LabeledDataset> data;
  LossModel model;
  SmoothnessProfile profile;
  Cluster cluster;

  Vector dense_minimizer() const {
    Matrix h = dense_hessian(cluster.global_view(),
                             Vector::Zero(data->feature_dim()));
    Vector rhs =
        -cluster.global_view().gradient(Vector::Zero(data->feature_dim()));
    return h.ldlt().solve(rhs);
  }
};

Instance make_instance(bool logistic, Index n, Index p, double mu, int m,
                       std::uint64_t seed, bool normalize = false) {
  GeneratedDataset gen = logistic ? gen_logistic(n, p, Seed{seed})
                                  : gen_ridge(n, p, 0.2, Seed{seed});
  if (normalize) normalize_rows(gen.data);
  auto data = std::make_shared<LabeledDataset>(std::move(gen.data));
  LossModel model{logistic ? LossKind::kLogisticL2 : LossKind::kRidgeQuadratic,
                  mu, 10.0};
  SmoothnessProfile prof = smoothness_profile(model, *data);
  Cluster cluster(data, model, partition_even(*data, m, Seed{seed ^ 0xa5}));
  return {data, model, prof, std::move(cluster)};
}

RunConfig base_config(const Instance& inst, AlgorithmKind alg, double gamma,
                      ScheduleKind schedule) {
  RunConfig cfg;
  cfg.algorithm = alg;
  cfg.gamma = gamma;
  cfg.profile = inst.profile;
  cfg.schedule.kind = schedule;
  cfg.schedule.L = inst.profile.L;
  cfg.schedule.mu = inst.profile.mu;
  cfg.schedule.gamma = gamma;
  cfg.schedule.rho = cfg.rho;
  cfg.schedule.sigma = inst.profile.sigma;
  cfg.schedule.ell = inst.profile.ell;
  cfg.solver_seed = Seed{99};
  return cfg;
}

Vector random_point(Index p, std::uint64_t seed) {
  Rng rng(Seed{seed});
  Vector v(p);
  for (Index i = 0; i < p; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("momentum strength formula") {
  CHECK(momentum_beta(1.0, 0.0) == 0.0);
  CHECK(momentum_beta(1.0, 4.0) == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
  double prev = -1;
  for (double gamma : {0.0, 0.5, 1.0, 4.0, 50.0}) {
    double beta = momentum_beta(1.0, gamma);
    CHECK(beta >= prev);
    CHECK(beta < 1.0);
    prev = beta;
  }
  CHECK(momentum_beta(1.0, 1e12) > 0.999);
  CHECK_THROWS_AS(momentum_beta(0.0, 1.0), ContractError);
}

TEST_CASE("psi vanishes at a null step and matches dense algebra") {
  Instance inst = make_instance(false, 90, 6, 0.3, 3, 201);
  const Objective& local = inst.cluster.master_local_raw();
  Vector w_prev = random_point(6, 1);
  CHECK(psi(w_prev, w_prev, 1.0, 0.25, 0.7, 1e-3, local) == 0.0);

  Vector w_tilde = random_point(6, 2);
  double eps_t = 1e-3, rho = 0.25, gamma = 0.7, eta = 0.5;
  double got = psi(w_tilde, w_prev, eta, rho, gamma, eps_t, local);

  // quadratic local model: the inner product is the (H1 + gamma I) form
  Matrix h1 = dense_hessian(local, w_prev);
  Vector d = w_tilde - w_prev;
  double expect =
      eta * rho * (d.dot(h1 * d) + gamma * d.squaredNorm()) -
      eta * eps_t * d.norm();
  CHECK(got == doctest::Approx(expect).epsilon(1e-10));

  // strong convexity lower bound on the functional
  double mu = inst.model.reg_mu;
  CHECK(got >= eta * (rho * (mu + gamma) * d.squaredNorm() -
                      eps_t * d.norm()) -
                   1e-12);
}

TEST_CASE("global line search accepts the unit step on easy quadratics") {
  // L <= 2 (gamma + mu)(1 - rho) guarantees first-trial acceptance
  Instance inst = make_instance(false, 80, 5, 0.5, 2, 202);
  const double rho = 0.25;
  const double gamma = inst.profile.L;  // comfortably above the threshold
  Vector w_prev = random_point(5, 3);
  Vector g = inst.cluster.reduce_gradient(w_prev);
  Subproblem sub = build_subproblem(inst.cluster, w_prev, g, gamma);
  Vector w_tilde = solve_direct(sub);

  LineSearchResult ls = line_search_option1(inst.cluster, w_prev, w_tilde,
                                            rho, gamma, 1e-9);
  CHECK(ls.eta == 1.0);
  CHECK(ls.value_evals == 2);  // one for F(w_prev), one accepted trial
}

TEST_CASE("global line search halving count stays within the smoothness bound") {
  Instance inst = make_instance(true, 120, 6, 0.05, 2, 203);
  const double rho = 0.25;
  const double gamma = 0.01;  // small proximal term forces some halvings
  Vector w_prev = 2.0 * random_point(6, 4);
  Vector g = inst.cluster.reduce_gradient(w_prev);
  Subproblem sub = build_subproblem(inst.cluster, w_prev, g, gamma);
  SvrgConfig scfg =
      default_svrg_config(inst.profile.L, gamma, sub.samples(), Seed{5});
  double eps_t = 0.05 * g.norm();
  SolveResult inner = solve_svrg(sub, w_prev, eps_t, scfg);
  REQUIRE(inner.converged);

  LineSearchResult ls = line_search_option1(inst.cluster, w_prev, inner.w,
                                            rho, gamma, eps_t);
  double threshold =
      inst.profile.L / (2.0 * (gamma + inst.model.reg_mu) * (1.0 - rho));
  int allowed = static_cast<int>(
                    std::ceil(std::log2(std::max(1.0, threshold)))) + 1;
  int halvings = ls.value_evals - 2;  // minus F(w_prev) and the accepted trial
  CHECK(halvings <= allowed);
  CHECK(ls.eta > 0.0);
}

TEST_CASE("local line search accepts immediately on a null step") {
  Instance inst = make_instance(true, 60, 5, 0.2, 2, 204);
  Vector w = random_point(5, 5);
  Vector g = inst.cluster.global_view().gradient(w);
  double eta = line_search_option2(w, w, g, 0.25, 0.5, inst.profile.nu, 1e-6,
                                   inst.cluster.master_local_raw());
  CHECK(eta == 1.0);
}

TEST_CASE("local line search matches a dense evaluation on quadratics") {
  Instance inst = make_instance(false, 70, 5, 0.3, 2, 205);
  const double rho = 0.25, gamma = 0.4;
  Vector w_prev = random_point(5, 6);
  Vector g = inst.cluster.reduce_gradient(w_prev);
  Subproblem sub = build_subproblem(inst.cluster, w_prev, g, gamma);
  Vector w_tilde = solve_direct(sub);
  double eps_t = 1e-8;

  double eta = line_search_option2(w_prev, w_tilde, g, rho, gamma, 0.0, eps_t,
                                   inst.cluster.master_local_raw());

  // replicate the acceptance test with dense algebra (nu = 0)
  Matrix h1 = dense_hessian(inst.cluster.master_local_raw(), w_prev);
  Vector d_tilde = w_tilde - w_prev;
  double a =
      rho * (d_tilde.dot(h1 * d_tilde) + gamma * d_tilde.squaredNorm());
  double expected = 1.0;
  while (true) {
    Vector d = expected * d_tilde;
    double lhs = g.dot(d) + d.dot(h1 * d) + gamma * d.squaredNorm();
    double rhs = -(expected * (a - eps_t * d_tilde.norm()));
    if (lhs <= rhs) break;
    expected *= 0.5;
    REQUIRE(expected > 1e-12);
  }
  CHECK(eta == expected);
}

TEST_CASE("single machine with exact solves converges in one round") {
  Instance inst = make_instance(false, 60, 6, 0.3, 1, 206);
  RunConfig cfg = base_config(inst, AlgorithmKind::kDaneLS, 0.0,
                              ScheduleKind::kQuadraticDaneLS);
  cfg.target = StopTarget::grad_norm(1e-8);
  cfg.max_rounds = 5;
  Cluster cluster = inst.cluster.clone_for_run();
  RunTranscript t = run_dane_ls(cluster, cfg);
  CHECK(t.status == TerminalStatus::kConverged);
  CHECK(t.rounds_to_grad_norm(1e-8) == 1);
}

TEST_CASE("quadratic runs respect the round budget and certificates") {
  Instance inst = make_instance(false, 400, 40, 1.0 / std::sqrt(400.0), 4,
                                207);
  const double gamma = recommended_gamma(inst.profile.L, 40, 100, 0.1);
  REQUIRE(inst.cluster.hessian_deviation(Vector::Zero(40)) <= gamma);

  Vector w_star = inst.dense_minimizer();
  RunConfig cfg = base_config(inst, AlgorithmKind::kDaneLS, gamma,
                              ScheduleKind::kQuadraticDaneLS);
  cfg.target = StopTarget::iterate_error(1e-5, w_star);
  cfg.max_rounds = 4000;
  Cluster cluster = inst.cluster.clone_for_run();
  RunTranscript t = run_dane_ls(cluster, cfg);
  REQUIRE(t.status == TerminalStatus::kConverged);

  RateConstants k;
  k.L = inst.profile.L;
  k.mu = inst.profile.mu;
  k.gamma = gamma;
  k.dist0 = (t.records[0].w - w_star).norm();
  RateBound bound = round_bound(TheoremBound::kT1, k, 1e-5);
  CHECK(t.rounds_to_iterate_error(1e-5, w_star) <=
        static_cast<std::int64_t>(std::ceil(bound.rounds)));

  for (std::size_t i = 1; i < t.records.size(); ++i) {
    CHECK(t.records[i].cert_residual <=
          t.records[i].eps_t * (1 + 1e-9) + 1e-15);
  }
}

TEST_CASE("option one keeps the logistic objective non-increasing") {
  Instance inst = make_instance(true, 200, 10, 1.0 / std::sqrt(200.0), 4,
                                208);
  const Index n_local = 50;
  const double gamma = 4.0 / std::sqrt(static_cast<double>(n_local));
  RunConfig cfg = base_config(inst, AlgorithmKind::kDaneLS, gamma,
                              ScheduleKind::kGlobalDaneLS);
  cfg.line_search = LineSearchKind::kOptionI;
  cfg.solver = SolverKind::kSvrg;
  cfg.target = StopTarget::grad_norm(1e-9);
  cfg.max_rounds = 60;
  Cluster cluster = inst.cluster.clone_for_run();
  RunTranscript t = run_dane_ls(cluster, cfg);

  for (std::size_t i = 1; i < t.records.size(); ++i) {
    CHECK(t.records[i].f_value <= t.records[i - 1].f_value + 1e-12);
    CHECK(t.records[i].cert_residual <=
          t.records[i].eps_t * (1 + 1e-9) + 1e-15);
  }
  // proposal steps shrink over the run
  if (t.records.size() > 20) {
    std::size_t quarter = t.records.size() / 4;
    double early = 0, late = 0;
    for (std::size_t i = 1; i <= quarter; ++i)
      early += t.records[i].tilde_step_norm;
    for (std::size_t i = t.records.size() - quarter; i < t.records.size(); ++i)
      late += t.records[i].tilde_step_norm;
    CHECK(late < early);
  }
}

TEST_CASE("zero momentum reproduces the plain transcript bit for bit") {
  Instance inst = make_instance(false, 160, 8, 0.2, 4, 209);
  const double gamma = 0.8;
  RunConfig cfg = base_config(inst, AlgorithmKind::kDaneLS, gamma,
                              ScheduleKind::kQuadraticDaneLS);
  cfg.target = StopTarget::grad_norm(1e-9);
  cfg.max_rounds = 200;

  Cluster c1 = inst.cluster.clone_for_run();
  RunTranscript plain = run_dane_ls(c1, cfg);

  cfg.algorithm = AlgorithmKind::kDaneHB;
  cfg.beta_override = 0.0;
  Cluster c2 = inst.cluster.clone_for_run();
  RunTranscript hb = run_dane_hb(c2, cfg);

  REQUIRE(plain.records.size() == hb.records.size());
  for (std::size_t i = 0; i < plain.records.size(); ++i) {
    CHECK(plain.records[i].w == hb.records[i].w);
    CHECK(plain.records[i].ledger.rounds == hb.records[i].ledger.rounds);
    CHECK(plain.records[i].ledger.vectors_transmitted ==
          hb.records[i].ledger.vectors_transmitted);
  }
  CHECK(plain.status == hb.status);
}

TEST_CASE("momentum accelerates an ill-conditioned quadratic") {
  // feature dimension close to the sample count makes the data term nearly
  // singular, so the effective condition number is large
  Instance inst = make_instance(false, 300, 200, 1e-3, 4, 210);
  Matrix h = dense_hessian(inst.cluster.global_view(), Vector::Zero(200));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  const double mu_eff = eig.eigenvalues().minCoeff();
  const double gamma = recommended_gamma(inst.profile.L, 200, 75, 0.1);

  Vector w_star = inst.dense_minimizer();

  RunConfig ls = base_config(inst, AlgorithmKind::kDaneLS, gamma,
                             ScheduleKind::kQuadraticDaneLS);
  ls.schedule.mu = mu_eff;
  ls.profile.mu = mu_eff;
  ls.target = StopTarget::iterate_error(1e-4, w_star);
  ls.max_rounds = 4000;
  Cluster c1 = inst.cluster.clone_for_run();
  RunTranscript t_ls = run_dane_ls(c1, ls);
  REQUIRE(t_ls.status == TerminalStatus::kConverged);

  RunConfig hb = ls;
  hb.algorithm = AlgorithmKind::kDaneHB;
  hb.schedule.kind = ScheduleKind::kQuadraticHB;
  Cluster c2 = inst.cluster.clone_for_run();
  RunTranscript t_hb = run_dane_hb(c2, hb);
  REQUIRE(t_hb.status == TerminalStatus::kConverged);

  CHECK(t_hb.rounds_to_iterate_error(1e-4, w_star) <
        t_ls.rounds_to_iterate_error(1e-4, w_star));
}

TEST_CASE("linear-model outer loop halves the ridge gap per round") {
  Instance inst = make_instance(false, 240, 12, 0.25, 4, 211);
  const double gamma = 0.9;
  Vector w_star = inst.dense_minimizer();
  const double f_star = inst.cluster.global_view().value(w_star);

  RunConfig cfg = base_config(inst, AlgorithmKind::kDaneHBLM, gamma,
                              ScheduleKind::kHbLmOuter);
  cfg.target = StopTarget::suboptimality(1e-10, f_star);
  cfg.max_rounds = 60;
  Cluster cluster = inst.cluster.clone_for_run();
  RunTranscript t = run_dane_hb_lm(cluster, cfg);
  REQUIRE(t.status == TerminalStatus::kConverged);

  const double gap0 = t.records[0].f_value - f_star;
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    double prev = t.records[i - 1].f_value - f_star;
    double cur = t.records[i].f_value - f_star;
    CHECK(cur <= 0.5 * prev + 1e-9 * gap0);
  }
}

TEST_CASE("one outer round at vanishing tolerance solves ridge exactly") {
  Instance inst = make_instance(false, 120, 8, 0.3, 4, 212);
  Vector w_star = inst.dense_minimizer();
  const double f_star = inst.cluster.global_view().value(w_star);

  RunConfig cfg = base_config(inst, AlgorithmKind::kDaneHBLM, 0.7,
                              ScheduleKind::kFixed);
  cfg.schedule.fixed_eps = 1e-16;  // floored to 1e-14
  cfg.max_rounds = 1;
  cfg.target = StopTarget::grad_norm(0.0);
  Cluster cluster = inst.cluster.clone_for_run();
  RunTranscript t = run_dane_hb_lm(cluster, cfg);
  REQUIRE(t.records.size() == 2);
  CHECK(t.records[1].f_value - f_star <= 1e-12);
}

TEST_CASE("all-workers baseline equals the master-only loop on one machine") {
  Instance inst = make_instance(false, 90, 6, 0.3, 1, 213);
  RunConfig cfg = base_config(inst, AlgorithmKind::kInexactDane, 0.5,
                              ScheduleKind::kQuadraticDaneLS);
  cfg.target = StopTarget::grad_norm(1e-10);
  cfg.max_rounds = 50;

  Cluster c1 = inst.cluster.clone_for_run();
  RunTranscript inexact = run_inexact_dane(c1, cfg);
  cfg.algorithm = AlgorithmKind::kDaneLS;
  Cluster c2 = inst.cluster.clone_for_run();
  RunTranscript master_only = run_dane_ls(c2, cfg);

  REQUIRE(inexact.records.size() == master_only.records.size());
  for (std::size_t i = 0; i < inexact.records.size(); ++i) {
    CHECK(inexact.records[i].w == master_only.records[i].w);
    CHECK(inexact.records[i].ledger.rounds ==
          master_only.records[i].ledger.rounds);
    CHECK(inexact.records[i].ledger.vectors_transmitted ==
          master_only.records[i].ledger.vectors_transmitted);
  }
}

TEST_CASE("averaged exact solves follow the dense affine map") {
  Instance inst = make_instance(false, 64, 8, 0.4, 4, 214);
  const double gamma = 0.6;
  Vector w_star = inst.dense_minimizer();
  Matrix h = dense_hessian(inst.cluster.global_view(), Vector::Zero(8));

  RunConfig cfg = base_config(inst, AlgorithmKind::kInexactDane, gamma,
                              ScheduleKind::kQuadraticDaneLS);
  cfg.max_rounds = 1;
  cfg.target = StopTarget::grad_norm(0.0);
  Cluster cluster = inst.cluster.clone_for_run();
  RunTranscript t = run_inexact_dane(cluster, cfg);
  REQUIRE(t.records.size() == 2);

  Vector expect = Vector::Zero(8);
  Vector err0 = t.records[0].w - w_star;
  for (int j = 0; j < 4; ++j) {
    Matrix hj = dense_hessian(inst.cluster.worker_raw(j), Vector::Zero(8)) +
                gamma * Matrix::Identity(8, 8);
    expect += err0 - hj.ldlt().solve(h * err0);
  }
  expect /= 4.0;
  CHECK((t.records[1].w - w_star - expect).norm() <= 1e-9);
}

TEST_CASE("gradient descent contracts at the classic rate") {
  Instance inst = make_instance(false, 150, 6, 1.0, 3, 215);
  Matrix h = dense_hessian(inst.cluster.global_view(), Vector::Zero(6));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  const double kappa =
      eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
  Matrix h_sqrt = eig.eigenvectors() *
                  eig.eigenvalues().cwiseSqrt().asDiagonal() *
                  eig.eigenvectors().transpose();
  Vector w_star = inst.dense_minimizer();
  const double f_star = inst.cluster.global_view().value(w_star);

  RunConfig cfg = base_config(inst, AlgorithmKind::kGradientDescent, 0.0,
                              ScheduleKind::kFixed);
  cfg.profile.L = eig.eigenvalues().maxCoeff();  // exact smoothness constant
  cfg.target = StopTarget::suboptimality(1e-7, f_star);
  cfg.max_rounds = 500;
  Cluster cluster = inst.cluster.clone_for_run();
  RunTranscript t = run_gd(cluster, cfg);
  REQUIRE(t.status == TerminalStatus::kConverged);
  REQUIRE(kappa <= 10.0);

  for (std::size_t i = 1; i < t.records.size(); ++i) {
    double prev = (h_sqrt * (t.records[i - 1].w - w_star)).norm();
    double cur = (h_sqrt * (t.records[i].w - w_star)).norm();
    CHECK(cur <= (1.0 - 1.0 / kappa) * prev + 1e-12);
  }

  double d0 = (t.records[0].w - w_star).norm();
  double budget = std::ceil(
      kappa * std::log(kappa * d0 * d0 * cfg.profile.L / 1e-7));
  CHECK(static_cast<double>(t.outer_rounds()) <= budget);
}

TEST_CASE("gradient descent is invariant to the partition count") {
  Instance a = make_instance(false, 120, 5, 0.5, 1, 216);
  Instance b{a.data, a.model, a.profile,
             Cluster(a.data, a.model, partition_even(*a.data, 4, Seed{7}))};

  RunConfig cfg = base_config(a, AlgorithmKind::kGradientDescent, 0.0,
                              ScheduleKind::kFixed);
  cfg.target = StopTarget::grad_norm(1e-8);
  cfg.max_rounds = 300;

  Cluster c1 = a.cluster.clone_for_run();
  Cluster c2 = b.cluster.clone_for_run();
  RunTranscript t1 = run_gd(c1, cfg);
  RunTranscript t2 = run_gd(c2, cfg);
  REQUIRE(t1.records.size() == t2.records.size());
  for (std::size_t i = 0; i < t1.records.size(); ++i)
    CHECK((t1.records[i].w - t2.records[i].w).norm() <= 1e-12);
}

TEST_CASE("unit steps are accepted once proposals are small") {
  Instance inst =
      make_instance(true, 200, 8, 1.0 / std::sqrt(200.0), 4, 217, true);
  const double gamma = 2.0 / std::sqrt(50.0);
  RunConfig cfg = base_config(inst, AlgorithmKind::kDaneLS, gamma,
                              ScheduleKind::kGlobalDaneLS);
  cfg.line_search = LineSearchKind::kOptionI;
  cfg.solver = SolverKind::kSvrg;
  cfg.target = StopTarget::grad_norm(1e-10);
  cfg.max_rounds = 80;
  Cluster cluster = inst.cluster.clone_for_run();
  RunTranscript t = run_dane_ls(cluster, cfg);

  const double threshold =
      2.0 * (gamma + inst.model.reg_mu) / (5.0 * inst.profile.nu);
  bool below = false;
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    if (below) CHECK(t.records[i].eta == 1.0);
    if (t.records[i].tilde_step_norm < threshold) below = true;
  }
  CHECK(below);  // the run must actually enter the unit-step regime
}

TEST_CASE("rho is validated only when a line search is active") {
  Instance inst = make_instance(true, 60, 4, 0.2, 2, 218);
  RunConfig cfg = base_config(inst, AlgorithmKind::kDaneLS, 0.5,
                              ScheduleKind::kGlobalDaneLS);
  cfg.line_search = LineSearchKind::kOptionI;
  cfg.rho = 0.4;  // outside (0, 1/3)
  Cluster cluster = inst.cluster.clone_for_run();
  CHECK_THROWS_AS(run_dane_ls(cluster, cfg), ConfigError);
  cfg.rho = 0.25;
  cfg.schedule.rho = 0.25;
  cfg.max_rounds = 3;
  cfg.solver = SolverKind::kSvrg;
  CHECK_NOTHROW(run_dane_ls(cluster, cfg));
}

TEST_CASE("ledger reconstruction identity holds across algorithms") {
  Instance inst = make_instance(true, 120, 6, 0.3, 4, 219);
  const double gamma = 0.8;
  for (AlgorithmKind alg :
       {AlgorithmKind::kDaneLS, AlgorithmKind::kDaneHB,
        AlgorithmKind::kInexactDane, AlgorithmKind::kGradientDescent}) {
    RunConfig cfg = base_config(inst, alg, gamma, ScheduleKind::kLocalDaneLS);
    cfg.line_search = alg == AlgorithmKind::kGradientDescent
                          ? LineSearchKind::kNone
                          : LineSearchKind::kOptionI;
    if (alg == AlgorithmKind::kInexactDane)
      cfg.line_search = LineSearchKind::kNone;
    if (alg == AlgorithmKind::kGradientDescent)
      cfg.schedule.kind = ScheduleKind::kFixed;
    cfg.solver = SolverKind::kSvrg;
    cfg.target = StopTarget::grad_norm(1e-8);
    cfg.max_rounds = 12;
    Cluster cluster = inst.cluster.clone_for_run();
    RunTranscript t = run_algorithm(cluster, cfg);

    const auto& led = t.last().ledger;
    const int m = 4;
    std::int64_t value_rounds = led.scalars_transmitted / m;
    std::int64_t vector_rounds = led.rounds - value_rounds;
    CHECK(led.vectors_transmitted == vector_rounds * (m + 1) + value_rounds);
  }
}

TEST_CASE("round-limited runs charge exactly one reduction per loop") {
  Instance inst = make_instance(false, 120, 6, 0.3, 4, 220);
  RunConfig cfg = base_config(inst, AlgorithmKind::kDaneLS, 0.7,
                              ScheduleKind::kQuadraticDaneLS);
  cfg.target = StopTarget::grad_norm(0.0);  // unattainable
  cfg.max_rounds = 7;
  Cluster cluster = inst.cluster.clone_for_run();
  RunTranscript t = run_dane_ls(cluster, cfg);
  CHECK(t.status == TerminalStatus::kRoundLimit);
  CHECK(t.last().ledger.rounds == 7);
  CHECK(t.outer_rounds() == 7);
}
