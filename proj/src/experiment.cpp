#include "dane/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace dane {
namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value for '" + key + "': " + v);
  }
}

long parse_long(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    long d = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer value for '" + key + "': " + v);
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("invalid boolean value for '" + key + "': " + v);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

const char* algorithm_name(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::kDaneLS:
      return "dane_ls";
    case AlgorithmKind::kDaneHB:
      return "dane_hb";
    case AlgorithmKind::kDaneHBLM:
      return "dane_hb_lm";
    case AlgorithmKind::kInexactDane:
      return "inexact_dane";
    case AlgorithmKind::kGradientDescent:
      return "gd";
  }
  return "unknown";
}

AlgorithmKind algorithm_from_name(const std::string& name) {
  if (name == "dane_ls") return AlgorithmKind::kDaneLS;
  if (name == "dane_hb") return AlgorithmKind::kDaneHB;
  if (name == "dane_hb_lm") return AlgorithmKind::kDaneHBLM;
  if (name == "inexact_dane") return AlgorithmKind::kInexactDane;
  if (name == "gd") return AlgorithmKind::kGradientDescent;
  throw ConfigError("unknown algorithm: " + name);
}

Seed cell_seed(Seed base, const std::string& algorithm, int m,
               int replication) {
  std::string tag = algorithm + "/" + std::to_string(m) + "/" +
                    std::to_string(replication);
  return Seed{base.value ^ fnv1a(tag)};
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected key = value", line_no);
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ParseError("empty key or value", line_no);

    if (key == "id") {
      cfg.id = val;
    } else if (key == "problem") {
      if (val == "ridge")
        cfg.problem = ProblemKind::kRidgeSynthetic;
      else if (val == "logistic")
        cfg.problem = ProblemKind::kLogisticSynthetic;
      else if (val == "libsvm")
        cfg.problem = ProblemKind::kLibsvmFile;
      else
        throw ConfigError("unknown problem kind: " + val);
    } else if (key == "data") {
      cfg.libsvm_path = val;
    } else if (key == "n") {
      cfg.n = parse_long(val, key);
    } else if (key == "p") {
      cfg.p = parse_long(val, key);
    } else if (key == "noise_sigma") {
      cfg.noise_sigma = parse_double(val, key);
    } else if (key == "normalize") {
      cfg.normalize = parse_bool(val, key);
    } else if (key == "domain_radius_b") {
      cfg.domain_radius_b = parse_double(val, key);
    } else if (key == "mu_rule") {
      if (val == "inv_sqrt_n")
        cfg.mu_rule = MuRule::kInvSqrtN;
      else if (val == "fixed")
        cfg.mu_rule = MuRule::kFixed;
      else
        throw ConfigError("unknown mu_rule: " + val);
    } else if (key == "mu") {
      cfg.mu_fixed = parse_double(val, key);
    } else if (key == "m_list") {
      cfg.m_list.clear();
      for (const auto& item : split_list(val))
        cfg.m_list.push_back(static_cast<int>(parse_long(item, key)));
      if (cfg.m_list.empty()) throw ConfigError("m_list is empty");
    } else if (key == "gamma_rule") {
      if (val == "recommended")
        cfg.gamma_rule = GammaRule::kRecommended;
      else if (val == "scaled")
        cfg.gamma_rule = GammaRule::kScaled;
      else if (val == "fixed")
        cfg.gamma_rule = GammaRule::kFixed;
      else
        throw ConfigError("unknown gamma_rule: " + val);
    } else if (key == "delta") {
      cfg.delta = parse_double(val, key);
    } else if (key == "gamma_c") {
      cfg.gamma_c = parse_double(val, key);
    } else if (key == "gamma") {
      cfg.gamma_fixed = parse_double(val, key);
    } else if (key == "algorithms") {
      cfg.algorithms.clear();
      for (const auto& item : split_list(val))
        cfg.algorithms.push_back(algorithm_from_name(item));
      if (cfg.algorithms.empty()) throw ConfigError("algorithms is empty");
    } else if (key == "line_search") {
      if (val == "none")
        cfg.line_search = LineSearchKind::kNone;
      else if (val == "option1")
        cfg.line_search = LineSearchKind::kOptionI;
      else if (val == "option2")
        cfg.line_search = LineSearchKind::kOptionII;
      else
        throw ConfigError("unknown line_search: " + val);
    } else if (key == "solver") {
      if (val == "auto")
        cfg.solver = SolverKind::kAuto;
      else if (val == "direct")
        cfg.solver = SolverKind::kDirect;
      else if (val == "svrg")
        cfg.solver = SolverKind::kSvrg;
      else
        throw ConfigError("unknown solver: " + val);
    } else if (key == "init") {
      if (val == "zero")
        cfg.init = InitKind::kZero;
      else if (val == "local_argmin")
        cfg.init = InitKind::kLocalArgmin;
      else
        throw ConfigError("unknown init: " + val);
    } else if (key == "rho") {
      cfg.rho = parse_double(val, key);
    } else if (key == "eps_target") {
      cfg.eps_target = parse_double(val, key);
    } else if (key == "max_rounds") {
      cfg.max_rounds = static_cast<int>(parse_long(val, key));
    } else if (key == "replications") {
      cfg.replications = static_cast<int>(parse_long(val, key));
      if (cfg.replications < 1)
        throw ConfigError("replications must be >= 1");
    } else if (key == "base_seed") {
      cfg.base_seed =
          Seed{static_cast<std::uint64_t>(parse_long(val, key))};
    } else {
      throw ConfigError("unknown configuration key: " + key);
    }
  }
  if (cfg.problem == ProblemKind::kLibsvmFile && cfg.libsvm_path.empty())
    throw ConfigError("problem = libsvm requires data = <path>");
  return cfg;
}

namespace {

struct CellSetup {
  std::shared_ptr<LabeledDataset> data;
  LossModel model;
  SmoothnessProfile profile;
  double gamma = 0;
  Index n_local = 0;
};

CellSetup prepare_cell(const ExperimentConfig& cfg, int m, Seed seed,
                       const LabeledDataset* libsvm_data) {
  CellSetup cell;
  switch (cfg.problem) {
    case ProblemKind::kRidgeSynthetic: {
      GeneratedDataset gen =
          gen_ridge(cfg.n, cfg.p, cfg.noise_sigma, derive_seed(seed, "data"));
      cell.data = std::make_shared<LabeledDataset>(std::move(gen.data));
      cell.model.kind = LossKind::kRidgeQuadratic;
      break;
    }
    case ProblemKind::kLogisticSynthetic: {
      GeneratedDataset gen =
          gen_logistic(cfg.n, cfg.p, derive_seed(seed, "data"));
      cell.data = std::make_shared<LabeledDataset>(std::move(gen.data));
      cell.model.kind = LossKind::kLogisticL2;
      break;
    }
    case ProblemKind::kLibsvmFile: {
      cell.data = std::make_shared<LabeledDataset>(*libsvm_data);
      cell.model.kind = LossKind::kLogisticL2;
      break;
    }
  }
  if (cfg.normalize) normalize_rows(*cell.data);

  cell.model.domain_radius_b = cfg.domain_radius_b;
  cell.model.reg_mu =
      cfg.mu_rule == MuRule::kInvSqrtN
          ? 1.0 / std::sqrt(static_cast<double>(cell.data->sample_count()))
          : cfg.mu_fixed;

  cell.profile = smoothness_profile(cell.model, *cell.data);
  cell.n_local = cell.data->sample_count() / m;
  switch (cfg.gamma_rule) {
    case GammaRule::kRecommended:
      cell.gamma = recommended_gamma(cell.profile.L, cell.data->feature_dim(),
                                     cell.n_local, cfg.delta);
      break;
    case GammaRule::kScaled:
      cell.gamma = cfg.gamma_c / std::sqrt(static_cast<double>(cell.n_local));
      break;
    case GammaRule::kFixed:
      cell.gamma = cfg.gamma_fixed;
      break;
  }
  return cell;
}

RunConfig make_run_config(const ExperimentConfig& cfg, AlgorithmKind alg,
                          const CellSetup& cell, Seed seed, bool quadratic) {
  RunConfig rc;
  rc.algorithm = alg;
  rc.gamma = cell.gamma;
  rc.rho = cfg.rho;
  rc.profile = cell.profile;
  rc.max_rounds = cfg.max_rounds;
  rc.target = StopTarget::grad_norm(cfg.eps_target);
  rc.solver = cfg.solver;
  rc.solver_seed = derive_seed(seed, "solver");
  rc.init = cfg.init;

  rc.schedule.L = cell.profile.L;
  rc.schedule.mu = cell.profile.mu;
  rc.schedule.gamma = cell.gamma;
  rc.schedule.rho = cfg.rho;
  rc.schedule.sigma = cell.profile.sigma;
  rc.schedule.ell = cell.profile.ell;

  switch (alg) {
    case AlgorithmKind::kDaneLS:
    case AlgorithmKind::kInexactDane:
      rc.schedule.kind = quadratic ? ScheduleKind::kQuadraticDaneLS
                                   : ScheduleKind::kGlobalDaneLS;
      rc.line_search = quadratic ? LineSearchKind::kNone : cfg.line_search;
      break;
    case AlgorithmKind::kDaneHB:
      rc.schedule.kind = quadratic ? ScheduleKind::kQuadraticHB
                                   : ScheduleKind::kLocalDaneLS;
      rc.line_search = quadratic ? LineSearchKind::kNone : cfg.line_search;
      break;
    case AlgorithmKind::kDaneHBLM:
      rc.schedule.kind = ScheduleKind::kHbLmOuter;
      rc.line_search = LineSearchKind::kNone;
      break;
    case AlgorithmKind::kGradientDescent:
      rc.schedule.kind = ScheduleKind::kFixed;
      rc.schedule.fixed_eps = 1.0;
      rc.line_search = LineSearchKind::kNone;
      break;
  }
  // InexactDane never line-searches: workers only solve and average.
  if (alg == AlgorithmKind::kInexactDane)
    rc.line_search = LineSearchKind::kNone;
  return rc;
}

const char* status_name(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::kConverged:
      return "converged";
    case TerminalStatus::kRoundLimit:
      return "round_limit";
    case TerminalStatus::kSolverFailure:
      return "solver_failure";
  }
  return "unknown";
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  std::vector<ResultRow> rows;
  std::shared_ptr<LabeledDataset> libsvm_data;
  if (cfg.problem == ProblemKind::kLibsvmFile) {
    std::ifstream in(cfg.libsvm_path);
    if (!in) throw ConfigError("cannot open " + cfg.libsvm_path);
    libsvm_data = std::make_shared<LabeledDataset>(parse_libsvm(in));
  }

  for (AlgorithmKind alg : cfg.algorithms) {
    const std::string name = algorithm_name(alg);
    for (int m : cfg.m_list) {
      for (int rep = 0; rep < cfg.replications; ++rep) {
        Seed seed = cell_seed(cfg.base_seed, name, m, rep);
        ResultRow row;
        row.experiment_id = cfg.id;
        row.algorithm = name;
        row.m = m;
        row.replication = rep;
        row.seed = seed.value;

        auto started = std::chrono::steady_clock::now();
        try {
          CellSetup cell = prepare_cell(cfg, m, seed, libsvm_data.get());
          Cluster cluster(
              cell.data, cell.model,
              partition_even(*cell.data, m, derive_seed(seed, "partition")));
          RunConfig rc =
              make_run_config(cfg, alg, cell, seed, cluster.quadratic());
          RunTranscript transcript = run_algorithm(cluster, rc);

          row.rounds_to_target =
              transcript.rounds_to_grad_norm(cfg.eps_target);
          row.final_f = transcript.last().f_value;
          row.final_grad_norm = transcript.last().grad_norm;
          row.vectors_transmitted =
              transcript.last().ledger.vectors_transmitted;
          row.total_ifo = transcript.last().ledger.ifo_calls;
          row.status = status_name(transcript.status);
        } catch (const std::exception& e) {
          row.status = std::string("error: ") + e.what();
        }
        row.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          started)
                .count();
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "experiment_id,algorithm,m,replication,seed,rounds_to_target,"
         "final_f,final_grad_norm,vectors_transmitted,total_ifo\n";
  for (const auto& r : rows) {
    out << r.experiment_id << ',' << r.algorithm << ',' << r.m << ','
        << r.replication << ',' << r.seed << ',' << r.rounds_to_target << ','
        << format_double(r.final_f) << ',' << format_double(r.final_grad_norm)
        << ',' << r.vectors_transmitted << ',' << r.total_ifo << '\n';
  }
}

void write_jsonl(const std::vector<ResultRow>& rows, std::ostream& out) {
  for (const auto& r : rows) {
    nlohmann::json j{{"experiment_id", r.experiment_id},
                     {"algorithm", r.algorithm},
                     {"m", r.m},
                     {"replication", r.replication},
                     {"seed", r.seed},
                     {"rounds_to_target", r.rounds_to_target},
                     {"final_f", r.final_f},
                     {"final_grad_norm", r.final_grad_norm},
                     {"vectors_transmitted", r.vectors_transmitted},
                     {"total_ifo", r.total_ifo},
                     {"wall_seconds", r.wall_seconds},
                     {"status", r.status}};
    out << j.dump() << '\n';
  }
}

ScalingFit fit_scaling(const std::vector<ResultRow>& rows,
                       const std::string& algorithm) {
  std::map<int, std::vector<double>> by_m;
  for (const auto& r : rows) {
    if (r.algorithm != algorithm || r.rounds_to_target < 1) continue;
    by_m[r.m].push_back(static_cast<double>(r.rounds_to_target));
  }
  if (by_m.size() < 3)
    throw ContractError("fit_scaling: need at least 3 distinct m values");

  std::vector<double> xs, ys;
  bool constant_rounds = true;
  for (auto& [m, rounds] : by_m) {
    std::sort(rounds.begin(), rounds.end());
    const std::size_t k = rounds.size();
    double median = (k % 2 == 1) ? rounds[k / 2]
                                 : 0.5 * (rounds[k / 2 - 1] + rounds[k / 2]);
    xs.push_back(std::log(static_cast<double>(m)));
    ys.push_back(std::log(median));
    constant_rounds = constant_rounds && ys.back() == ys.front();
  }
  if (constant_rounds) {
    ScalingFit fit;
    fit.degenerate = true;
    fit.intercept = ys.front();
    fit.r2 = 1.0;
    return fit;
  }

  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }

  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double resid = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += resid * resid;
  }
  fit.r2 = 1.0 - ss_res / syy;
  return fit;
}

}  // namespace dane
