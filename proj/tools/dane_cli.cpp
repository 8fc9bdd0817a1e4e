// Command-line front end: experiment sweeps, dataset generation, LIBSVM
// inspection and the verification audits.

#include <CLI11.hpp>
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "dane/experiment.hpp"

namespace {

using namespace dane;

int run_config_command(const std::string& config_path,
                       const std::string& csv_path,
                       const std::string& jsonl_path,
                       const std::string& m_override) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "cannot open config file: " << config_path << "\n";
    return 2;
  }
  ExperimentConfig cfg = parse_experiment_config(in);
  if (!m_override.empty()) {
    // --param m=4,16,64
    auto eq = m_override.find('=');
    if (eq == std::string::npos || m_override.substr(0, eq) != "m")
      throw ConfigError("only m=<list> overrides are supported");
    cfg.m_list.clear();
    std::stringstream ss(m_override.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) cfg.m_list.push_back(std::stoi(item));
    if (cfg.m_list.empty()) throw ConfigError("empty m override");
  }

  std::vector<ResultRow> rows = run_experiment(cfg);
  if (csv_path.empty()) {
    write_csv(rows, std::cout);
  } else {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) {
      std::cerr << "cannot open " << csv_path << " for writing\n";
      return 2;
    }
    write_csv(rows, csv);
  }
  if (!jsonl_path.empty()) {
    std::ofstream jsonl(jsonl_path, std::ios::binary);
    if (!jsonl) {
      std::cerr << "cannot open " << jsonl_path << " for writing\n";
      return 2;
    }
    write_jsonl(rows, jsonl);
  }

  // Slope summaries when the sweep spans enough machine counts.
  std::map<std::string, bool> seen;
  for (const auto& r : rows) seen[r.algorithm] = true;
  for (const auto& [alg, _] : seen) {
    try {
      ScalingFit fit = fit_scaling(rows, alg);
      std::cerr << alg << ": log-log slope=" << fit.slope << " r2=" << fit.r2
                << (fit.degenerate ? " (degenerate)" : "") << "\n";
    } catch (const ContractError&) {
      // fewer than 3 machine counts; nothing to fit
    }
  }
  return 0;
}

int gen_data_command(const std::string& kind, long n, long p, double noise,
                     bool normalize, std::uint64_t seed,
                     const std::string& out_path) {
  GeneratedDataset gen;
  if (kind == "ridge") {
    gen = gen_ridge(n, p, noise, Seed{seed});
  } else if (kind == "logistic") {
    gen = gen_logistic(n, p, Seed{seed});
  } else {
    std::cerr << "unknown kind: " << kind << "\n";
    return 2;
  }
  if (normalize) normalize_rows(gen.data);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot open " << out_path << " for writing\n";
    return 2;
  }
  write_libsvm(gen.data, out);
  std::cerr << "wrote " << gen.data.sample_count() << " samples, dim "
            << gen.data.feature_dim() << " to " << out_path << "\n";
  return 0;
}

int parse_command(const std::string& path, bool stats) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << "\n";
    return 2;
  }
  LabeledDataset data = parse_libsvm(in);
  std::cout << "samples: " << data.sample_count() << "\n"
            << "features: " << data.feature_dim() << "\n";
  if (stats) {
    Index positive = 0, negative = 0, other = 0;
    for (Index i = 0; i < data.labels.size(); ++i) {
      if (data.labels[i] == 1.0)
        ++positive;
      else if (data.labels[i] == -1.0)
        ++negative;
      else
        ++other;
    }
    Index nonzeros = 0;
    for (Index i = 0; i < data.features.rows(); ++i)
      for (Index j = 0; j < data.features.cols(); ++j)
        if (data.features(i, j) != 0.0) ++nonzeros;
    std::cout << "labels +1: " << positive << "\n"
              << "labels -1: " << negative << "\n"
              << "labels other: " << other << "\n"
              << "nonzeros: " << nonzeros << " ("
              << static_cast<double>(nonzeros) /
                     static_cast<double>(data.features.size())
              << " dense)\n";
  }
  return 0;
}

// Round-by-round contraction checks on a small ridge instance: the weighted
// error norm must shrink by the quadratic-rate factor each round, and the
// linear-model outer loop must halve its gap per outer round.
bool verify_contraction(std::uint64_t seed_value, std::ostream& os) {
  bool all_ok = true;
  const Index n_total = 800, p = 80;
  const int m = 4;
  LossModel model{LossKind::kRidgeQuadratic,
                  1.0 / std::sqrt(static_cast<double>(n_total)), 10.0};

  GeneratedDataset gen = gen_ridge(n_total, p, 0.1, Seed{seed_value});
  auto data = std::make_shared<LabeledDataset>(std::move(gen.data));
  Cluster cluster(data, model,
                  partition_even(*data, m, Seed{seed_value ^ 0xabcdef}));
  SmoothnessProfile prof = smoothness_profile(model, *data);
  double gamma = recommended_gamma(prof.L, p, data->sample_count() / m, 0.1);

  double deviation = cluster.hessian_deviation(Vector::Zero(p));
  os << "hessian deviation " << deviation << " vs gamma " << gamma
     << (deviation <= gamma ? " [ok]" : " [FAILED]") << "\n";
  all_ok = all_ok && deviation <= gamma;

  // exact minimizer and weighted norm from a dense factorization
  Matrix hess = dense_hessian(cluster.global_view(), Vector::Zero(p));
  Vector rhs = -cluster.global_view().gradient(Vector::Zero(p));
  Vector w_star = hess.ldlt().solve(rhs);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hess);
  Matrix h_sqrt = eig.eigenvectors() *
                  eig.eigenvalues().cwiseSqrt().asDiagonal() *
                  eig.eigenvectors().transpose();

  RunConfig rc;
  rc.algorithm = AlgorithmKind::kDaneLS;
  rc.gamma = gamma;
  rc.profile = prof;
  rc.schedule = {ScheduleKind::kQuadraticDaneLS, prof.L, prof.mu, gamma};
  rc.target = StopTarget::iterate_error(1e-8, w_star);
  rc.max_rounds = 2000;
  RunTranscript transcript = run_dane_ls(cluster, rc);

  const double factor = 1.0 - prof.mu / (2.0 * (prof.mu + 2.0 * gamma));
  bool contraction_ok = transcript.status == TerminalStatus::kConverged;
  double worst = 0;
  for (std::size_t i = 1; i < transcript.records.size(); ++i) {
    double prev = (h_sqrt * (transcript.records[i - 1].w - w_star)).norm();
    double cur = (h_sqrt * (transcript.records[i].w - w_star)).norm();
    if (cur > factor * prev + 1e-9) contraction_ok = false;
    if (prev > 0) worst = std::max(worst, cur / prev);
  }
  os << "per-round weighted contraction worst " << worst << " vs bound "
     << factor << (contraction_ok ? " [ok]" : " [FAILED]") << "\n";
  all_ok = all_ok && contraction_ok;

  // linear-model outer loop on the same data: gap at least halves per round
  Cluster lm_cluster = cluster.clone_for_run();
  double f_star = lm_cluster.global_view().value(w_star);
  RunConfig lm;
  lm.algorithm = AlgorithmKind::kDaneHBLM;
  lm.gamma = gamma;
  lm.profile = prof;
  lm.schedule = {ScheduleKind::kHbLmOuter, prof.L, prof.mu, gamma,
                 0.0,  prof.sigma, prof.ell};
  lm.target = StopTarget::suboptimality(1e-9, f_star);
  lm.max_rounds = 80;
  RunTranscript lm_run = run_dane_hb_lm(lm_cluster, lm);

  bool halving_ok = lm_run.status == TerminalStatus::kConverged;
  double gap0 = lm_run.records.front().f_value - f_star;
  for (std::size_t i = 1; i < lm_run.records.size(); ++i) {
    double gap_prev = lm_run.records[i - 1].f_value - f_star;
    double gap_cur = lm_run.records[i].f_value - f_star;
    if (gap_cur > 0.5 * gap_prev + 1e-9 * gap0) halving_ok = false;
  }
  os << "linear-model outer gap halving over " << lm_run.outer_rounds()
     << " rounds" << (halving_ok ? " [ok]" : " [FAILED]") << "\n";
  all_ok = all_ok && halving_ok;
  return all_ok;
}

int verify_command(const std::string& suite, std::uint64_t seed) {
  bool ok = true;
  if (suite == "lemmas" || suite == "all") {
    AuditSummary pre = audit_precondition_bounds(200, Seed{seed});
    AuditSummary hb = audit_heavy_ball_radius(500, Seed{seed + 1});
    AuditSummary lh = audit_lipschitz_hessian(200, Seed{seed + 2});
    ConcentrationSummary conc =
        audit_hessian_concentration(50, 4, 500, 50, 0.1, Seed{seed + 3});
    std::cout << pre.to_string() << "\n"
              << hb.to_string() << "\n"
              << lh.to_string() << "\n"
              << conc.to_string() << "\n";
    ok = ok && pre.ok() && hb.ok() && lh.ok() && conc.ok();
  }
  if (suite == "contraction" || suite == "all") {
    ok = verify_contraction(seed, std::cout) && ok;
  }
  std::cout << (ok ? "verify: all checks passed" : "verify: FAILURES")
            << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed approximate Newton simulator"};
  app.require_subcommand(1);

  std::string config_path, csv_path, jsonl_path, m_override;
  auto* run = app.add_subcommand("run", "Run the experiment in a config file");
  run->add_option("--config", config_path, "experiment config file")
      ->required();
  run->add_option("--csv", csv_path, "CSV output path (default stdout)");
  run->add_option("--jsonl", jsonl_path, "JSON-lines summary path");

  auto* sweep =
      app.add_subcommand("sweep", "Run a config with a parameter override");
  sweep->add_option("--config", config_path, "experiment config file")
      ->required();
  sweep->add_option("--param", m_override, "override, e.g. m=4,16,64")
      ->required();
  sweep->add_option("--csv", csv_path, "CSV output path (default stdout)");
  sweep->add_option("--jsonl", jsonl_path, "JSON-lines summary path");

  std::string suite = "all";
  std::uint64_t verify_seed = 987654321;
  auto* verify = app.add_subcommand("verify", "Run the audit suites");
  verify->add_option("--suite", suite, "lemmas | contraction | all")
      ->check(CLI::IsMember({"lemmas", "contraction", "all"}));
  verify->add_option("--seed", verify_seed, "audit seed");

  std::string kind = "ridge", out_path;
  long gen_n = 1000, gen_p = 50;
  double noise = 0.1;
  bool normalize = false;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--kind", kind, "ridge | logistic")
      ->check(CLI::IsMember({"ridge", "logistic"}));
  gen->add_option("--n", gen_n, "sample count");
  gen->add_option("--p", gen_p, "feature dimension");
  gen->add_option("--noise", noise, "ridge noise sigma");
  gen->add_flag("--normalize", normalize, "scale rows to norm <= 1");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", out_path, "output path (LIBSVM text)")->required();

  std::string libsvm_path;
  bool stats = false;
  auto* parse = app.add_subcommand("parse", "Parse and inspect a LIBSVM file");
  parse->add_option("--libsvm", libsvm_path, "input file")->required();
  parse->add_flag("--stats", stats, "print label/sparsity statistics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed() || sweep->parsed())
      return run_config_command(config_path, csv_path, jsonl_path, m_override);
    if (verify->parsed()) return verify_command(suite, verify_seed);
    if (gen->parsed())
      return gen_data_command(kind, gen_n, gen_p, noise, normalize, gen_seed,
                              out_path);
    if (parse->parsed()) return parse_command(libsvm_path, stats);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
