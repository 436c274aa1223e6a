#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lowhtr/checks.hpp"
#include "lowhtr/common.hpp"
#include "lowhtr/env.hpp"
#include "lowhtr/harness.hpp"
#include "lowhtr/huber.hpp"
#include "lowhtr/lotus.hpp"

namespace {

using namespace lowhtr;

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* envv = std::getenv("LOWHTR_THREADS"); envv != nullptr && envv[0] != '\0') {
    const int n = std::atoi(envv);
    if (n > 0) return n;
  }
  return 1;
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> replications;
  std::optional<long> horizon;
  int threads = 0;
  std::optional<std::string> format;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "experiment config file (JSON)");
    app->add_option("--seed", seed, "base seed override");
    app->add_option("--out-dir", out_dir, "output directory");
    app->add_option("--replications", replications, "replication count override");
    app->add_option("--horizon", horizon, "horizon override");
    app->add_option("--threads", threads, "worker threads (fallback: LOWHTR_THREADS)");
    app->add_option("--format", format, "trace format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
  }

  harness::ExperimentConfig load_or_default(const char* fallback_json) const {
    harness::ExperimentConfig config = config_path.empty()
                                           ? harness::parse_config_json(fallback_json)
                                           : harness::load_config_file(config_path);
    if (seed) config.base_seed = *seed;
    if (out_dir) config.out_dir = *out_dir;
    if (replications) config.replications = *replications;
    if (horizon) config.horizon = *horizon;
    if (format) config.format = *format;
    config.threads = resolve_threads(threads);
    return config;
  }
};

constexpr const char* kDefaultSimulate = R"({
  "environment": {"scenario": "scenario1", "noise": {"kind": "pareto", "param": 1.9}, "seed": 1},
  "algorithm": {"name": "lotus", "mode": "rank_agnostic"},
  "horizon": 2000, "replications": 3, "base_seed": 1, "out_dir": "out"
})";

constexpr const char* kDefaultBench = R"({
  "environment": {"scenario": "scenario1", "noise": {"kind": "pareto", "param": 1.9}, "seed": 1},
  "algorithms": [
    {"name": "lotus", "mode": "rank_agnostic"},
    {"name": "baseline-subg", "r": 2, "D_rr": 4.0}
  ],
  "horizon": 20000, "replications": 10, "base_seed": 1, "out_dir": "out"
})";

int run_simulate(const CommonFlags& flags, bool bench) {
  harness::ExperimentConfig config =
      flags.load_or_default(bench ? kDefaultBench : kDefaultSimulate);
  if (bench && config.algorithms.size() < 2)
    throw InputError("bench needs at least two algorithms in the config");
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  auto written = harness::run_experiment(config);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "wall-clock: " << secs << " s\n";
  for (const auto& p : written) std::cout << p.string() << "\n";
  return 0;
}

int run_estimate(const std::string& n_csv, int seeds, const std::string& noise_kind,
                 double noise_param, int d, int r, double eps, double c_tau, double c_lambda,
                 const std::string& out_dir) {
  env::NoiseModel noise;
  if (noise_kind == "student_t")
    noise = env::NoiseModel::student_t(noise_param);
  else if (noise_kind == "pareto")
    noise = env::NoiseModel::pareto(noise_param);
  else if (noise_kind == "laplace")
    noise = env::NoiseModel::laplace(noise_param);
  else if (noise_kind == "gaussian")
    noise = env::NoiseModel::gaussian(noise_param);
  else
    throw InputError("unknown noise kind: " + noise_kind);
  noise.validate();

  std::vector<long> ns;
  {
    std::string token;
    std::stringstream ss(n_csv.empty() ? "1000" : n_csv);
    while (std::getline(ss, token, ',')) ns.push_back(std::stol(token));
  }
  if (r < 1 || r > d) throw InputError("estimate: need 1 <= r <= d");

  linalg::Matrix theta_star = linalg::Matrix::Zero(d, d);
  for (int i = 0; i < r; ++i) theta_star(i, i) = 7.0 - 3.0 * i / std::max(1, r - 1);
  const double sigma = 1.0 / std::sqrt(static_cast<double>(d) * d);

  std::printf("# nuclear-norm Huber fit, noise=%s(%g) delta=%g c=%g, d=%d r=%d, %d seeds\n",
              noise.kind_name(), noise.param, noise.delta, noise.c_bound, d, r, seeds);
  std::printf("%10s %14s %14s %14s %12s %12s\n", "n", "median_err", "q25", "q75", "tau",
              "lambda");
  std::vector<double> log_n, log_med;
  std::string csv = "n,median_err,q25,q75,tau,lambda\n";
  for (long n : ns) {
    std::vector<double> errs;
    huber::Schedule sched{};
    for (int s = 0; s < seeds; ++s) {
      rng::Engine rng(1234 + 97 * s + n);
      huber::RegressionData data(d, d);
      data.reserve(n);
      for (long i = 0; i < n; ++i) {
        auto x = env::sample_ball_design(d, d, 1.0, rng);
        data.append(x, theta_star.cwiseProduct(x).sum() + env::sample_noise(noise, rng));
      }
      sched = huber::schedule_params(n, d, noise.delta, noise.c_bound, eps, c_tau, c_lambda,
                                     sigma);
      huber::HuberConfig fit_config;
      fit_config.tau = sched.tau;
      fit_config.lambda_nuc = sched.lambda;
      auto fit = huber::lamm_solve(data, fit_config, linalg::Matrix::Zero(d, d));
      errs.push_back((fit.theta_hat - theta_star).norm());
    }
    const double med = harness::quantile(errs, 0.5);
    const double q25 = harness::quantile(errs, 0.25);
    const double q75 = harness::quantile(errs, 0.75);
    std::printf("%10ld %14.6g %14.6g %14.6g %12.5g %12.5g\n", n, med, q25, q75, sched.tau,
                sched.lambda);
    csv += std::to_string(n) + "," + harness::format_double(med) + "," +
           harness::format_double(q25) + "," + harness::format_double(q75) + "," +
           harness::format_double(sched.tau) + "," + harness::format_double(sched.lambda) +
           "\n";
    log_n.push_back(std::log(static_cast<double>(n)));
    log_med.push_back(std::log(med));
  }
  if (ns.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      sx += log_n[i];
      sy += log_med[i];
      sxx += log_n[i] * log_n[i];
      sxy += log_n[i] * log_med[i];
    }
    const double m = static_cast<double>(ns.size());
    std::printf("# log-log slope: %.4f (theory: -delta/(1+delta) = %.4f)\n",
                (m * sxy - sx * sy) / (m * sxx - sx * sx),
                -noise.delta / (1.0 + noise.delta));
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "estimate.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << csv;
    std::cout << path.string() << "\n";
  }
  return 0;
}

int run_lower_bound(int d, int r, double delta, long horizon, std::uint64_t seed,
                    const std::string& algo, int replications, const std::string& out_dir,
                    int threads) {
  auto inst = env::gen_lower_bound_instance(d, r, delta, horizon, seed);
  std::printf("K=%d arms (d=%d, r=%d, delta=%g), gamma=%.6g, starred arm %d\n", inst.K(), d,
              r, delta, inst.gamma, inst.starred_arm);
  const double base = std::pow(inst.gamma, inst.delta);
  double worst = 0.0;
  for (int a = 0; a < inst.K(); ++a) {
    const double ip = inst.theta_star.cwiseProduct(inst.arms[a]).sum();
    const double want = a == inst.starred_arm ? 2.0 * base : base;
    worst = std::max(worst, std::fabs(ip - want));
  }
  std::printf("validated: <X_star,Theta*> = %.12g (= 2*gamma^delta), others = %.12g "
              "(= gamma^delta), worst deviation %.3g, all ||X||_F <= 1\n",
              2.0 * base, base, worst);

  if (!algo.empty()) {
    env::LowerBoundBandit bandit(inst);
    std::vector<double> finals;
    for (int j = 0; j < replications; ++j) {
      auto owned = bandit.clone();
      harness::AlgoSpec spec;
      if (algo == "baseline-subg") {
        spec.name = "baseline-subg";
        spec.baseline.r = r;
        spec.baseline.D_rr = std::pow(inst.gamma, delta);  // smallest useful scale
      } else if (algo == "lotus" || algo == "lotus-rank-agnostic") {
        spec.name = "lotus";
        spec.lotus.mode = lotus::Mode::RankAgnostic;
        spec.lotus.T0 = std::min<long>(50, horizon);
      } else if (algo == "lotus-known-rank") {
        spec.name = "lotus";
        spec.lotus.mode = lotus::Mode::KnownRank;
        spec.lotus.r = r;
        spec.lotus.D_rr = std::pow(inst.gamma, delta);
        spec.lotus.T0 = std::min<long>(50, horizon);
      } else {
        throw InputError("unknown algorithm: " + algo);
      }
      auto result = harness::run_one(*owned, spec, horizon, seed + 1 + j);
      finals.push_back(result.trace.final_cum_regret());
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        harness::write_trace_csv(std::filesystem::path(out_dir) /
                                     ("lower_bound_trace_rep" + std::to_string(j) + ".csv"),
                                 result.trace);
      }
    }
    std::printf("%s on the instance: median final cumulative regret %.6g over %d reps\n",
                algo.c_str(), harness::quantile(finals, 0.5), replications);
  }
  (void)threads;
  return 0;
}

int run_validate(bool full) {
  const auto ids = full ? checks::all_ids() : checks::quick_ids();
  bool all_ok = true;
  for (int id : ids) {
    const auto result = checks::run_check(id, !full);
    all_ok = all_ok && result.pass;
    std::printf("[%s] %02d %-22s (%.2fs) %s\n", result.pass ? "PASS" : "FAIL", id,
                result.name.c_str(), result.seconds, result.detail.c_str());
  }
  return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LowHTR: low-rank matrix bandits with heavy-tailed rewards"};
  app.set_version_flag("--version", std::string("lowhtr ") + lowhtr::kVersion);
  app.require_subcommand(1);

  CommonFlags sim_flags, bench_flags;
  auto* simulate = app.add_subcommand("simulate", "run one algorithm on one environment");
  sim_flags.attach(simulate);
  auto* bench = app.add_subcommand("bench", "paired algorithm comparison with aggregates");
  bench_flags.attach(bench);

  auto* estimate =
      app.add_subcommand("estimate", "fit the robust estimator, print error vs n");
  std::string est_n = "500,1000,2000,4000", est_noise = "student_t", est_out;
  int est_seeds = 20, est_d = 10, est_r = 2;
  double est_param = 1.7, est_eps = 0.1, est_ctau = 1.0, est_clambda = 1.0;
  estimate->add_option("--n", est_n, "comma-separated sample sizes");
  estimate->add_option("--seeds", est_seeds, "seeds per sample size");
  estimate->add_option("--noise", est_noise, "student_t|pareto|laplace|gaussian");
  estimate->add_option("--param", est_param, "noise parameter");
  estimate->add_option("--d", est_d, "matrix dimension");
  estimate->add_option("--r", est_r, "rank of the ground truth");
  estimate->add_option("--eps", est_eps, "confidence level in the schedules");
  estimate->add_option("--c-tau", est_ctau, "tau schedule constant");
  estimate->add_option("--c-lambda", est_clambda, "lambda schedule constant");
  estimate->add_option("--out-dir", est_out, "write estimate.csv here");

  auto* lower = app.add_subcommand("lower-bound", "emit and validate a hard instance");
  int lb_d = 5, lb_r = 2, lb_reps = 1, lb_threads = 0;
  double lb_delta = 1.0;
  long lb_horizon = 1000;
  std::uint64_t lb_seed = 1;
  std::string lb_algo, lb_out;
  lower->add_option("--d", lb_d, "dimension (d x d arms)");
  lower->add_option("--r", lb_r, "rank parameter");
  lower->add_option("--delta", lb_delta, "moment order");
  lower->add_option("--horizon", lb_horizon, "horizon T used in gamma");
  lower->add_option("--seed", lb_seed, "seed for the starred arm");
  lower->add_option("--algo", lb_algo, "optionally run: lotus|lotus-known-rank|baseline-subg");
  lower->add_option("--replications", lb_reps, "replications when running an algorithm");
  lower->add_option("--out-dir", lb_out, "trace output directory");
  lower->add_option("--threads", lb_threads, "unused; accepted for symmetry");

  auto* validate = app.add_subcommand("validate", "run the quick invariant suite");
  bool validate_full = false;
  validate->add_flag("--full", validate_full, "run the full acceptance checks instead");

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) return run_simulate(sim_flags, false);
    if (bench->parsed()) return run_simulate(bench_flags, true);
    if (estimate->parsed())
      return run_estimate(est_n, est_seeds, est_noise, est_param, est_d, est_r, est_eps,
                          est_ctau, est_clambda, est_out);
    if (lower->parsed())
      return run_lower_bound(lb_d, lb_r, lb_delta, lb_horizon, lb_seed, lb_algo, lb_reps,
                             lb_out, lb_threads);
    if (validate->parsed()) return run_validate(validate_full);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const lowhtr::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
}
