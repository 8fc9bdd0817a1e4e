#include <doctest.h>

#include <sstream>

#include "dane/experiment.hpp"

using namespace dane;

namespace {

ExperimentConfig config_from(const std::string& text) {
  std::istringstream in(text);
  return parse_experiment_config(in);
}

std::string csv_of(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  write_csv(rows, out);
  return out.str();
}

}  // namespace

TEST_CASE("config parsing handles keys, lists and comments") {
  ExperimentConfig cfg = config_from(
      "# tiny sweep\n"
      "id = smoke\n"
      "problem = ridge\n"
      "n = 64\n"
      "p = 4\n"
      "m_list = 1, 2,4\n"
      "gamma_rule = fixed\n"
      "gamma = 0.25\n"
      "algorithms = dane_ls, gd\n"
      "replications = 2\n"
      "base_seed = 42\n");
  CHECK(cfg.id == "smoke");
  CHECK(cfg.n == 64);
  REQUIRE(cfg.m_list.size() == 3);
  CHECK(cfg.m_list[2] == 4);
  CHECK(cfg.gamma_rule == GammaRule::kFixed);
  CHECK(cfg.gamma_fixed == 0.25);
  REQUIRE(cfg.algorithms.size() == 2);
  CHECK(cfg.algorithms[1] == AlgorithmKind::kGradientDescent);
  CHECK(cfg.replications == 2);
  CHECK(cfg.base_seed.value == 42);
}

TEST_CASE("config parsing rejects malformed input") {
  CHECK_THROWS_AS(config_from("unknown_key = 3\n"), ConfigError);
  CHECK_THROWS_AS(config_from("problem ridge\n"), ParseError);
  CHECK_THROWS_AS(config_from("problem = libsvm\n"), ConfigError);
  CHECK_THROWS_AS(config_from("n = abc\n"), ConfigError);
  CHECK_THROWS_AS(config_from("algorithms = warp_drive\n"), ConfigError);
}

TEST_CASE("cell seeds differ across the sweep grid") {
  Seed base{123};
  CHECK(cell_seed(base, "dane_ls", 4, 0).value !=
        cell_seed(base, "dane_ls", 4, 1).value);
  CHECK(cell_seed(base, "dane_ls", 4, 0).value !=
        cell_seed(base, "dane_ls", 8, 0).value);
  CHECK(cell_seed(base, "dane_ls", 4, 0).value !=
        cell_seed(base, "dane_hb", 4, 0).value);
  CHECK(cell_seed(base, "dane_hb", 4, 1).value ==
        cell_seed(base, "dane_hb", 4, 1).value);
}

TEST_CASE("experiment sweeps are byte-deterministic") {
  ExperimentConfig cfg = config_from(
      "id = det\n"
      "problem = ridge\n"
      "n = 96\n"
      "p = 6\n"
      "m_list = 2,4\n"
      "gamma_rule = fixed\n"
      "gamma = 0.4\n"
      "algorithms = dane_ls,dane_hb\n"
      "replications = 2\n"
      "eps_target = 1e-6\n"
      "max_rounds = 100\n"
      "base_seed = 7\n");
  std::string a = csv_of(run_experiment(cfg));
  std::string b = csv_of(run_experiment(cfg));
  CHECK(a == b);
  CHECK(a.find("experiment_id,algorithm,m,replication,seed,rounds_to_target,"
               "final_f,final_grad_norm,vectors_transmitted,total_ifo\n") ==
        0);
  CHECK(a.find('\r') == std::string::npos);
}

TEST_CASE("single machine with exact solves reaches the target in one round") {
  ExperimentConfig cfg = config_from(
      "problem = ridge\n"
      "n = 60\n"
      "p = 5\n"
      "m_list = 1\n"
      "gamma_rule = fixed\n"
      "gamma = 0\n"
      "algorithms = dane_ls\n"
      "eps_target = 1e-8\n"
      "max_rounds = 10\n"
      "base_seed = 11\n");
  std::vector<ResultRow> rows = run_experiment(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].rounds_to_target == 1);
  CHECK(rows[0].status == "converged");
}

TEST_CASE("failures are recorded per row without aborting the sweep") {
  ExperimentConfig cfg = config_from(
      "problem = ridge\n"
      "n = 60\n"
      "p = 5\n"
      "m_list = 1,120\n"  // 120 machines exceed the sample count
      "gamma_rule = fixed\n"
      "gamma = 0\n"
      "algorithms = dane_ls\n"
      "max_rounds = 5\n"
      "base_seed = 13\n");
  std::vector<ResultRow> rows = run_experiment(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].status == "converged");
  CHECK(rows[1].status.find("error") == 0);
  CHECK(rows[1].rounds_to_target == -1);
}

TEST_CASE("scaling fit recovers planted exponents") {
  std::vector<ResultRow> rows;
  auto add = [&rows](const std::string& alg, int m, std::int64_t rounds) {
    ResultRow r;
    r.algorithm = alg;
    r.m = m;
    r.rounds_to_target = rounds;
    rows.push_back(r);
  };
  for (int m : {4, 16, 64}) {
    add("sqrt", m, static_cast<std::int64_t>(4 * std::sqrt(m)));
    add("quartic", m,
        static_cast<std::int64_t>(std::llround(8 * std::pow(m, 0.25))));
    add("flat", m, 17);
  }
  ScalingFit sq = fit_scaling(rows, "sqrt");
  CHECK(sq.slope == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sq.r2 == doctest::Approx(1.0).epsilon(1e-9));

  ScalingFit quartic = fit_scaling(rows, "quartic");
  CHECK(quartic.slope == doctest::Approx(0.25).epsilon(0.02));

  ScalingFit flat = fit_scaling(rows, "flat");
  CHECK(flat.degenerate);
  CHECK(flat.slope == 0.0);

  CHECK_THROWS_AS(fit_scaling(rows, "missing"), ContractError);
}

TEST_CASE("jsonl carries status and timing next to the csv columns") {
  ExperimentConfig cfg = config_from(
      "problem = ridge\n"
      "n = 40\n"
      "p = 4\n"
      "m_list = 2\n"
      "gamma_rule = fixed\n"
      "gamma = 0.3\n"
      "algorithms = gd\n"
      "max_rounds = 50\n"
      "eps_target = 1e-4\n"
      "base_seed = 17\n");
  std::vector<ResultRow> rows = run_experiment(cfg);
  std::ostringstream out;
  write_jsonl(rows, out);
  std::string line = out.str();
  CHECK(line.find("\"algorithm\":\"gd\"") != std::string::npos);
  CHECK(line.find("\"status\"") != std::string::npos);
  CHECK(line.find("\"wall_seconds\"") != std::string::npos);
}
