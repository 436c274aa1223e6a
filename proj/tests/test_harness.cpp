#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lowhtr/common.hpp"
#include "lowhtr/harness.hpp"
#include "lowhtr/huber.hpp"

using namespace lowhtr;
using linalg::Matrix;
namespace fs = std::filesystem;

namespace {

harness::ExperimentConfig tiny_config(const std::string& out_dir) {
  harness::ExperimentConfig config;
  config.env.scenario = "scenario1";
  config.env.noise = env::NoiseModel::laplace(1.0);
  config.env.seed = 4;
  harness::AlgoSpec algo;
  algo.name = "lotus";
  algo.lotus.mode = lotus::Mode::KnownRank;
  algo.lotus.r = 2;
  algo.lotus.D_rr = 4.0;
  algo.lotus.T0 = 10;
  config.algorithms = {algo};
  config.horizon = 60;
  config.replications = 3;
  config.base_seed = 5;
  config.out_dir = out_dir;
  return config;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("quantile type-7 interpolation") {
  std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
  CHECK(harness::quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(harness::quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(harness::quantile(v, 0.0) == doctest::Approx(1.0));
  CHECK(harness::quantile(v, 1.0) == doctest::Approx(4.0));
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 12345.6789e-7, -2.0e17}) {
    CHECK(std::stod(harness::format_double(v)) == v);
  }
}

TEST_CASE("run_experiment writes traces, aggregate, and summary") {
  const fs::path dir = fs::temp_directory_path() / "lowhtr_test_exp";
  fs::remove_all(dir);
  auto config = tiny_config(dir.string());
  auto written = harness::run_experiment(config);
  CHECK(written.size() == 3 + 2);  // three traces + aggregate + summary

  SUBCASE("trace row count equals the horizon") {
    auto trace = harness::read_trace_csv(dir / "trace_lotus-known_rank_rep0.csv");
    CHECK(trace.rows.size() == 60);
    CHECK(trace.rows.front().round == 1);
    CHECK(trace.rows.back().round == 60);
  }

  SUBCASE("aggregate matches a recomputation from the per-replication files") {
    std::vector<trace::RegretTrace> traces;
    for (int j = 0; j < 3; ++j)
      traces.push_back(
          harness::read_trace_csv(dir / ("trace_lotus-known_rank_rep" + std::to_string(j) +
                                         ".csv")));
    std::ifstream agg(dir / "aggregate.csv");
    std::string line;
    std::getline(agg, line);
    CHECK(line == "round,algo,median_cumreg,q25,q75");
    long row = 0;
    while (std::getline(agg, line)) {
      std::stringstream ss(line);
      std::string field;
      std::getline(ss, field, ',');
      CHECK(std::stol(field) == row + 1);
      std::getline(ss, field, ',');
      CHECK(field == "lotus-known_rank");
      std::vector<double> sample;
      for (const auto& t : traces) sample.push_back(t.rows[row].cum_regret);
      std::getline(ss, field, ',');
      CHECK(std::stod(field) == harness::quantile(sample, 0.5));
      std::getline(ss, field, ',');
      CHECK(std::stod(field) == harness::quantile(sample, 0.25));
      std::getline(ss, field, ',');
      CHECK(std::stod(field) == harness::quantile(sample, 0.75));
      ++row;
    }
    CHECK(row == 60);
  }

  SUBCASE("identical configs give identical bytes") {
    const fs::path dir2 = fs::temp_directory_path() / "lowhtr_test_exp2";
    fs::remove_all(dir2);
    auto config2 = tiny_config(dir2.string());
    auto written2 = harness::run_experiment(config2);
    REQUIRE(written.size() == written2.size());
    for (std::size_t i = 0; i < written.size(); ++i)
      CHECK(slurp(written[i]) == slurp(written2[i]));
    fs::remove_all(dir2);
  }

  fs::remove_all(dir);
}

TEST_CASE("json trace format") {
  const fs::path dir = fs::temp_directory_path() / "lowhtr_test_json";
  fs::remove_all(dir);
  auto config = tiny_config(dir.string());
  config.replications = 1;
  config.format = "json";
  harness::run_experiment(config);
  const std::string text = slurp(dir / "trace_lotus-known_rank_rep0.json");
  CHECK(text.find("\"rows\"") != std::string::npos);
  CHECK(text.find("\"cum_regret\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("compute_oracle_regret") {
  auto config = tiny_config("unused");
  auto e = harness::make_env(config.env);

  SUBCASE("choosing the oracle arm every round gives zero regret") {
    const auto& arms = e->arms(0);
    int best = 0;
    for (std::size_t j = 1; j < arms.size(); ++j)
      if (e->mean_reward(arms[j]) > e->mean_reward(arms[best])) best = static_cast<int>(j);
    std::vector<int> chosen(25, best);
    for (double r : harness::compute_oracle_regret(*e, chosen)) CHECK(r == 0.0);
  }

  SUBCASE("regrets match a brute-force recomputation") {
    rng::Engine rng(3);
    std::vector<int> chosen;
    for (int i = 0; i < 40; ++i)
      chosen.push_back(static_cast<int>(rng.uniform_int(500)));
    auto regrets = harness::compute_oracle_regret(*e, chosen);
    const auto& arms = e->arms(0);
    double best = -1e300;
    for (const auto& x : arms) best = std::max(best, e->mean_reward(x));
    for (int i = 0; i < 40; ++i)
      CHECK(regrets[i] == doctest::Approx(best - e->mean_reward(arms[chosen[i]])));
  }
}

TEST_CASE("baseline: tau = 1e9 reduces Huber to square loss") {
  for (double x : {0.5, 100.0, 9999.0, -9999.0})
    CHECK(huber::huber_loss(x, 1e9) == doctest::Approx(0.5 * x * x).epsilon(1e-15));
}

TEST_CASE("baseline run shape and trend") {
  harness::EnvSpec spec;
  spec.scenario = "scenario1";
  spec.noise = env::NoiseModel::gaussian(0.3);
  spec.seed = 12;

  harness::BaselineConfig config;
  config.r = 2;
  config.D_rr = 4.0;
  config.c_beta = 0.05;  // practical width so the commit phase is informative

  int sublinear = 0;
  const int seeds = 8;
  for (int s = 0; s < seeds; ++s) {
    auto e = harness::make_env(spec);
    trace::SimContext ctx(60 + s);
    auto trace = harness::run_baseline_subgaussian(*e, config, 1500, ctx);
    REQUIRE(trace.rows.size() == 1500);
    // one-shot structure: a batch-0 exploration prefix, then batch-1 commit
    CHECK(trace.rows.front().phase == trace::Phase::Explore);
    CHECK(trace.rows.back().phase == trace::Phase::Exploit);
    double early = 0.0, late = 0.0;
    for (int i = 0; i < 375; ++i) early += trace.rows[i].inst_regret;
    for (int i = 1125; i < 1500; ++i) late += trace.rows[i].inst_regret;
    if (late < early) ++sublinear;
  }
  CHECK(sublinear >= 6);
}

TEST_CASE("config json round trip and errors") {
  auto config = tiny_config("somewhere");
  const std::string text = harness::config_to_json(config);
  auto parsed = harness::parse_config_json(text);
  CHECK(parsed.horizon == config.horizon);
  CHECK(parsed.algorithms.size() == 1);
  CHECK(parsed.algorithms[0].lotus.r == 2);
  CHECK(harness::config_hash(parsed) == harness::config_hash(config));

  CHECK_THROWS_AS(harness::parse_config_json("{not json"), InputError);
  CHECK_THROWS_AS(harness::parse_config_json(R"({"algorithm": {"name": "nope"}})"),
                  InputError);
  CHECK_THROWS_AS(harness::load_config_file("does_not_exist.toml"), InputError);

  auto bad = tiny_config("x");
  bad.replications = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = tiny_config("x");
  bad.horizon = 5;  // below T0
  CHECK_THROWS_AS(bad.validate(), InputError);
}

#ifdef LOWHTR_CLI_PATH
TEST_CASE("cli exit codes and diagnostics") {
  const fs::path dir = fs::temp_directory_path() / "lowhtr_test_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = LOWHTR_CLI_PATH;

  SUBCASE("missing config exits 1 with a one-line diagnostic") {
    const fs::path err = dir / "err.txt";
    const int rc = std::system(
        (cli + " simulate --config missing.toml >/dev/null 2>" + err.string()).c_str());
    CHECK(WEXITSTATUS(rc) == 1);
    const std::string text = slurp(err);
    CHECK(text.find("input error") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  }

  SUBCASE("simulate runs a tiny config") {
    const fs::path cfg = dir / "cfg.json";
    {
      std::ofstream out(cfg);
      out << R"({"environment": {"scenario": "scenario1",
                 "noise": {"kind": "laplace", "param": 1.0}, "seed": 2},
                 "algorithm": {"name": "lotus", "mode": "known_rank", "r": 2,
                               "D_rr": 4.0, "T0": 8},
                 "horizon": 40, "replications": 2, "base_seed": 9})";
    }
    const int rc = std::system((cli + " simulate --config " + cfg.string() + " --out-dir " +
                                (dir / "out").string() + " >/dev/null 2>/dev/null")
                                   .c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    CHECK(fs::exists(dir / "out" / "aggregate.csv"));
    CHECK(fs::exists(dir / "out" / "summary.json"));
    const std::string agg = slurp(dir / "out" / "aggregate.csv");
    CHECK(agg.rfind("round,algo,median_cumreg,q25,q75", 0) == 0);
  }

  SUBCASE("lower-bound prints the arm count and validation") {
    const fs::path outp = dir / "lb.txt";
    const int rc = std::system(
        (cli + " lower-bound --d 5 --r 2 --delta 1 --horizon 1000 >" + outp.string()).c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    const std::string text = slurp(outp);
    CHECK(text.find("K=8") != std::string::npos);
    CHECK(text.find("validated") != std::string::npos);
  }

  fs::remove_all(dir);
}
#endif
