#ifndef DANE_EXPERIMENT_HPP
#define DANE_EXPERIMENT_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "dane/algorithms.hpp"
#include "dane/oracles.hpp"

namespace dane {

enum class ProblemKind { kRidgeSynthetic, kLogisticSynthetic, kLibsvmFile };
enum class MuRule { kInvSqrtN, kFixed };
enum class GammaRule { kRecommended, kScaled, kFixed };

/// A sweep description: problem family, regularization rules, machine counts,
/// algorithms and replication policy. Parsed from a key = value text file;
/// see parse_experiment_config for the accepted keys.
struct ExperimentConfig {
  std::string id = "experiment";
  ProblemKind problem = ProblemKind::kRidgeSynthetic;
  std::string libsvm_path;
  Index n = 2000;
  Index p = 200;
  double noise_sigma = 0.1;
  bool normalize = false;
  double domain_radius_b = 10;

  MuRule mu_rule = MuRule::kInvSqrtN;
  double mu_fixed = 0;

  std::vector<int> m_list{4};

  GammaRule gamma_rule = GammaRule::kRecommended;
  double delta = 0.1;    // Recommended(delta)
  double gamma_c = 40;   // Scaled: gamma = c / sqrt(n)
  double gamma_fixed = 0;

  std::vector<AlgorithmKind> algorithms{AlgorithmKind::kDaneLS};
  LineSearchKind line_search = LineSearchKind::kOptionI;  // non-quadratic runs
  SolverKind solver = SolverKind::kAuto;
  InitKind init = InitKind::kZero;
  double rho = 0.25;

  double eps_target = 1e-5;
  int max_rounds = 500;
  int replications = 1;
  Seed base_seed{1};
};

ExperimentConfig parse_experiment_config(std::istream& in);

const char* algorithm_name(AlgorithmKind kind);
AlgorithmKind algorithm_from_name(const std::string& name);

/// Per-cell seed: base ^ hash(algorithm, m, replication), so any sweep cell
/// can be reproduced in isolation.
Seed cell_seed(Seed base, const std::string& algorithm, int m,
               int replication);

/// One sweep cell's outcome. `wall_seconds` and `status` go to the JSON-lines
/// summary only; the CSV carries the deterministic columns so identical
/// configurations produce byte-identical files.
struct ResultRow {
  std::string experiment_id;
  std::string algorithm;
  int m = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  std::int64_t rounds_to_target = -1;  // -1: target never reached
  double final_f = 0;
  double final_grad_norm = 0;
  std::int64_t vectors_transmitted = 0;
  std::int64_t total_ifo = 0;
  double wall_seconds = 0;
  std::string status = "ok";
};

/// Runs algorithm x m x replication cells in configuration order. Each cell
/// draws a fresh dataset and partition from its cell seed. Individual run
/// failures are recorded in the row status; the sweep always completes.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// CSV columns, in order: experiment_id, algorithm, m, replication, seed,
/// rounds_to_target, final_f, final_grad_norm, vectors_transmitted,
/// total_ifo. Header row mandatory, UTF-8, LF endings, floats at 17
/// significant digits.
void write_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void write_jsonl(const std::vector<ResultRow>& rows, std::ostream& out);

struct ScalingFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  bool degenerate = false;  // constant rounds across m
};

/// Ordinary least squares of log(median rounds_to_target) on log(m) for one
/// algorithm's rows. Needs at least 3 distinct m values with successful runs.
ScalingFit fit_scaling(const std::vector<ResultRow>& rows,
                       const std::string& algorithm);

}  // namespace dane

#endif  // DANE_EXPERIMENT_HPP
