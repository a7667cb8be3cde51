#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cars/errors.hpp"
#include "cars/experiment.hpp"
#include "test_support.hpp"

using namespace cars;
using cars::testing::fixture;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("cars-test-" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config file loading and validation") {
  const auto cfg = load_experiment_config(fixture("ex1_config.json"));
  CHECK(cfg.methods.size() == 5);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cfg.target_valid == 100);
  CHECK(fs::path(cfg.lm) == fixture("fig1.json"));
  CHECK(cfg.oracle);
  CHECK_NOTHROW(validate(cfg));

  auto bad = cfg;
  bad.methods = {"cars", "mcmc"};
  CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("unknown method 'mcmc'"), PreconditionError);
  bad = cfg;
  bad.target_valid = 5000;
  CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("exceeds cap"), PreconditionError);
  bad = cfg;
  bad.seeds.clear();
  CHECK_THROWS_AS(validate(bad), PreconditionError);
  bad = cfg;
  bad.lm = "http://localhost:1/x";
  CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("vocabulary"), PreconditionError);
  bad = cfg;
  bad.constraint = "missing.g";
  CHECK_THROWS_AS(validate(bad), PreconditionError);

  const auto dir = scratch("badcfg");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"lm": "x.json", "sedes": [1]})";
  CHECK_THROWS_WITH_AS(load_experiment_config(dir / "c.json"), doctest::Contains("sedes"), FormatError);
}

TEST_CASE("ex1 experiment: 15 rows, artifacts and determinism") {
  auto cfg = load_experiment_config(fixture("ex1_config.json"));
  cfg.out = scratch("ex1-a");
  std::ostringstream log;
  const auto summary = run_experiment(cfg, log);
  CHECK(summary.rows == 15);
  CHECK(summary.timeouts == 0);

  const auto metrics = lines(slurp(cfg.out / "metrics.csv"));
  REQUIRE(metrics.size() == 16);
  CHECK(metrics[0] == "method,seed,generations,accepted,kl_proxy,kl_oracle,tv_oracle,ci_low,ci_high");
  for (const auto& method : cfg.methods) {
    for (auto seed : cfg.seeds) {
      const auto name = method + "_seed" + std::to_string(seed);
      CHECK(fs::exists(cfg.out / ("trajectory_" + name + ".csv")));
      const auto samples = lines(slurp(cfg.out / ("samples_" + name + ".tsv")));
      CHECK(samples[0] == "generation\taccepted\tlm_calls\tsequence");
    }
  }

  auto again = cfg;
  again.out = scratch("ex1-b");
  run_experiment(again, log);
  for (const auto& entry : fs::directory_iterator(cfg.out)) {
    CHECK(slurp(entry.path()) == slurp(again.out / entry.path().filename()));
  }
}

TEST_CASE("forced timeouts are recorded, not fatal") {
  auto cfg = load_experiment_config(fixture("hard_config.json"));
  cfg.out = scratch("hard");
  std::ostringstream log;
  const auto summary = run_experiment(cfg, log);
  CHECK(summary.rows == 4);
  CHECK(summary.timeouts >= 1);
  const auto rows = lines(slurp(cfg.out / "metrics.csv"));
  bool short_row = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream row(rows[i]);
    std::string method, seed, gens, accepted;
    std::getline(row, method, ',');
    std::getline(row, seed, ',');
    std::getline(row, gens, ',');
    std::getline(row, accepted, ',');
    CHECK(gens == "10");
    short_row |= std::stoul(accepted) < 10;
  }
  CHECK(short_row);
  CHECK(log.str().find("(timeout)") != std::string::npos);
}

TEST_CASE("trie snapshots every 100 iterations") {
  ExperimentConfig cfg;
  cfg.lm = fixture("low_mass.json").string();
  cfg.constraint = fixture("ex1.g");
  cfg.methods = {"ars"};
  cfg.seeds = {4};
  cfg.target_valid = 0;
  cfg.sample_cap = 250;
  cfg.dump_trie = true;
  cfg.out = scratch("dump");
  std::ostringstream log;
  run_experiment(cfg, log);
  CHECK(fs::exists(cfg.out / "trie_ars_seed4_100.txt"));
  CHECK(fs::exists(cfg.out / "trie_ars_seed4_200.txt"));
  CHECK_FALSE(fs::exists(cfg.out / "trie_ars_seed4_300.txt"));
}

TEST_CASE("oracle report") {
  ExperimentConfig cfg;
  cfg.lm = fixture("fig1.json").string();
  cfg.constraint = fixture("ex1.g");
  const auto report = oracle_report(cfg);
  // 1 − invalid mass = 0.1027182 (tests/oracles/reference_values.py).
  CHECK(report.find("L-mass: 0.10271820000000001") != std::string::npos);
  CHECK(report.find("|L ∩ support|: 29") != std::string::npos);
  CHECK(report.find("  1$\t") != std::string::npos);

  cfg.constraint.clear();
  CHECK(oracle_report(cfg).find("L-mass: 1") != std::string::npos);

  cfg.constraint = fixture("no_match.g");
  CHECK(oracle_report(cfg).find("L-mass = 0") != std::string::npos);
}

#ifdef CARS_CLI_PATH
TEST_CASE("command-line tool") {
  const std::string cli = CARS_CLI_PATH;
  const auto out = scratch("cli");
  const auto quiet = " 2>/dev/null";
  SUBCASE("flags override the config file") {
    const auto cmd = cli + " run --config " + fixture("ex1_config.json").string() +
                     " --methods cars,gcd --seeds 5 --target-valid 20 --out " + out.string() + quiet;
    REQUIRE(std::system(cmd.c_str()) == 0);
    const auto rows = lines(slurp(out / "metrics.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].rfind("cars,5,", 0) == 0);
    CHECK(rows[2].rfind("gcd,5,", 0) == 0);
  }
  SUBCASE("validation errors exit with status 2") {
    const auto cmd = cli + " run --lm " + fixture("fig1.json").string() + " --methods bogus --out " +
                     out.string() + quiet;
    const int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 2);
  }
  SUBCASE("oracle-report") {
    const auto cmd = cli + " oracle-report --lm " + fixture("two_word.json").string() + " --constraint " +
                     fixture("two_word.dfa").string() + " > " + (out.string() + ".txt");
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(slurp(out.string() + ".txt").find("a$\t0.94339622641509424") != std::string::npos);
  }
}
#endif
