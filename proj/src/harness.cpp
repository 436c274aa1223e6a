#include "lowhtr/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "lowhtr/common.hpp"
#include "lowhtr/huber.hpp"

namespace lowhtr::harness {

using nlohmann::json;

std::unique_ptr<env::Bandit> make_env(const EnvSpec& spec) {
  spec.noise.validate();
  if (spec.scenario == "scenario1")
    return std::make_unique<env::Environment>(env::gen_scenario1(spec.seed, spec.noise));
  if (spec.scenario == "scenario2")
    return std::make_unique<env::Environment>(env::gen_scenario2(spec.seed, spec.noise));
  if (spec.scenario == "custom") {
    if (!spec.custom) throw InputError("custom environment requires explicit fields");
    const auto& c = *spec.custom;
    env::ArmSource source;
    if (c.arm_kind == "contextual") {
      source = env::ContextualArms{c.num_arms};
    } else if (c.arm_kind == "fixed") {
      auto rng = rng::Engine::substream(spec.seed, 0xa1);
      env::FixedArms arms;
      arms.arms.reserve(c.num_arms);
      for (int i = 0; i < c.num_arms; ++i)
        arms.arms.push_back(env::sample_unit_ball(c.d1, c.d2, rng) * c.arm_norm_bound);
      source = std::move(arms);
    } else {
      throw InputError("unknown arm kind: " + c.arm_kind);
    }
    return std::make_unique<env::Environment>(c.theta_star, c.rank, std::move(source),
                                              spec.noise, c.arm_norm_bound, spec.seed);
  }
  throw InputError("unknown scenario: " + spec.scenario);
}

void BaselineConfig::validate() const {
  if (r < 1) throw InputError("baseline: r must be >= 1");
  if (!(D_rr > 0.0)) throw InputError("baseline: D_rr must be positive");
  if (!(explore_scale > 0.0)) throw InputError("baseline: explore_scale must be positive");
  if (!(eps > 0.0) || eps >= 1.0) throw InputError("baseline: eps in (0,1)");
  if (!(lambda0 > 0.0)) throw InputError("baseline: lambda0 must be positive");
}

trace::RegretTrace run_baseline_subgaussian(env::Bandit& env, const BaselineConfig& config,
                                            long total_rounds, trace::SimContext& ctx) {
  config.validate();
  if (total_rounds < 0) throw InputError("baseline: negative horizon");
  trace::RegretTrace out;
  out.seed = ctx.rep_seed;
  if (total_rounds == 0) return out;

  const int d = static_cast<int>(std::max(env.d1(), env.d2()));
  const double raw = config.explore_scale *
                     std::sqrt(std::pow(static_cast<double>(d), 3.0) *
                               static_cast<double>(config.r) *
                               static_cast<double>(total_rounds)) /
                     config.D_rr;
  const long n_explore = std::clamp(static_cast<long>(std::ceil(raw)), 1L, total_rounds);

  huber::RegressionData data(env.d1(), env.d2());
  data.reserve(n_explore);
  std::vector<std::pair<Matrix, double>> history;
  history.reserve(n_explore);
  for (long round = 0; round < n_explore; ++round) {
    const int idx = env::exploration_sample(env, round, ctx.algo);
    const Matrix& x = env.arms(round)[idx];
    auto noise_rng = ctx.noise_for_round(round);
    const double y = env.reward(x, noise_rng);
    out.append(round + 1, 0, trace::Phase::Explore, idx,
               env.oracle_value(round) - env.mean_reward(x));
    data.append(x, y, env.S());
    history.emplace_back(x, y);
  }
  if (n_explore == total_rounds) return out;

  const double sigma = config.sigma > 0.0
                           ? config.sigma
                           : std::sqrt(1.0 / static_cast<double>(env.d1() * env.d2()));
  const double c_l =
      config.c_l > 0.0 ? config.c_l : 1.0 / static_cast<double>(env.d1() * env.d2());
  auto schedule = huber::schedule_params(n_explore, d, config.delta_assumed, config.c_assumed,
                                         config.eps, 1.0, config.c_lambda, sigma);
  huber::HuberConfig fit_config;
  fit_config.tau = 1e9;  // square loss
  fit_config.lambda_nuc = schedule.lambda;
  auto fit = huber::lamm_solve(data, fit_config, Matrix::Zero(env.d1(), env.d2()));

  auto split = linalg::SubspaceSplit::from_svd(fit.svd, config.r);
  const Index k = split.effective_dim();
  const Index p = split.total_dim();
  const long T2 = total_rounds - n_explore;

  lowto::LowTOParams params;
  params.delta = config.delta_assumed;
  params.b_moment = lowto::moment_bound(config.delta_assumed, env.S(), config.c_assumed);
  params.eps = config.eps;
  params.S = env.S();
  params.S_perp = lotus::compute_s_perp(n_explore, d, config.r, config.delta_assumed,
                                        config.c_assumed, config.eps, config.D_rr, sigma,
                                        c_l, config.sperp_const);
  params.lambda0 = config.lambda0;
  params.lambda_perp = lowto::lambda_perp_schedule(env.S(), T2, n_explore, k, config.lambda0);
  params.c_beta = config.c_beta;
  params.T2 = T2;
  params.truncation_enabled = false;

  std::vector<std::pair<linalg::Vector, double>> rotated;
  rotated.reserve(history.size());
  for (const auto& [x, y] : history)
    rotated.emplace_back(linalg::rotate_and_vectorize(x, split), y);
  auto state = lowto::init_state(rotated, params.lambda0, params.lambda_perp, k, p);

  auto result = lowto::run_lowto(state, params, env, split, T2, n_explore, 1, ctx);
  for (const auto& row : result.rows)
    out.append(row.round, row.batch, row.phase, row.arm_index, row.inst_regret);
  return out;
}

std::string AlgoSpec::label() const {
  if (name == "baseline-subg") return name;
  return std::string("lotus-") + lotus::mode_name(lotus.mode);
}

void ExperimentConfig::validate() const {
  if (horizon < 1) throw InputError("config: horizon must be >= 1");
  if (replications < 1) throw InputError("config: replications must be >= 1");
  if (threads < 1) throw InputError("config: threads must be >= 1");
  if (format != "csv" && format != "json")
    throw InputError("config: format must be csv or json");
  if (algorithms.empty()) throw InputError("config: no algorithm given");
  for (const auto& algo : algorithms) {
    if (algo.name == "lotus") {
      if (horizon < algo.lotus.T0) throw InputError("config: horizon must be >= T0");
    } else if (algo.name != "baseline-subg") {
      throw InputError("config: unknown algorithm " + algo.name);
    }
  }
  env.noise.validate();
}

namespace {

json noise_to_json(const env::NoiseModel& m) {
  return json{{"kind", m.kind_name()}, {"param", m.param}, {"delta", m.delta},
              {"c", m.c_bound}};
}

env::NoiseModel noise_from_json(const json& j) {
  const std::string kind = j.value("kind", "gaussian");
  env::NoiseModel m;
  if (kind == "student_t")
    m = env::NoiseModel::student_t(j.value("param", 1.7));
  else if (kind == "pareto")
    m = env::NoiseModel::pareto(j.value("param", 1.9));
  else if (kind == "laplace")
    m = env::NoiseModel::laplace(j.value("param", 1.0));
  else if (kind == "gaussian")
    m = env::NoiseModel::gaussian(j.value("param", 1.0));
  else
    throw InputError("unknown noise kind: " + kind);
  if (j.contains("delta")) m.delta = j.at("delta").get<double>();
  if (j.contains("c")) m.c_bound = j.at("c").get<double>();
  m.validate();
  return m;
}

json lotus_to_json(const lotus::LotusConfig& c) {
  return json{{"mode", lotus::mode_name(c.mode)},
              {"r", c.r},
              {"D_rr", c.D_rr},
              {"T0", c.T0},
              {"delta", c.delta},
              {"c", c.c_moment},
              {"eps", c.eps},
              {"c_tau", c.c_tau},
              {"c_lambda", c.c_lambda},
              {"C1", c.C1},
              {"sigma", c.sigma},
              {"c_l", c.c_l},
              {"lambda0", c.lambda0},
              {"c_beta", c.c_beta},
              {"refresh_every", c.refresh_every},
              {"sperp_const", c.sperp_const},
              {"use_eq6_in_agnostic", c.use_eq6_in_agnostic},
              {"lamm_alpha0", c.lamm_alpha0},
              {"lamm_psi", c.lamm_psi},
              {"lamm_stop_eps", c.lamm_stop_eps},
              {"lamm_max_iters", c.lamm_max_iters},
              {"warm_start", c.warm_start},
              {"randomized_refit_every", c.randomized_refit_every}};
}

lotus::Mode mode_from_name(const std::string& s) {
  if (s == "known_rank") return lotus::Mode::KnownRank;
  if (s == "rank_agnostic") return lotus::Mode::RankAgnostic;
  if (s == "randomized") return lotus::Mode::Randomized;
  throw InputError("unknown lotus mode: " + s);
}

AlgoSpec algo_from_json(const json& j) {
  AlgoSpec algo;
  algo.name = j.value("name", "lotus");
  if (algo.name == "lotus") {
    auto& c = algo.lotus;
    c.mode = mode_from_name(j.value("mode", "rank_agnostic"));
    c.r = j.value("r", 0);
    c.D_rr = j.value("D_rr", 0.0);
    c.T0 = j.value("T0", 50L);
    c.eps = j.value("eps", 0.05);
    if (j.contains("delta") || j.contains("c")) {
      algo.delta_from_env = false;
      c.delta = j.value("delta", 1.0);
      c.c_moment = j.value("c", 1.0);
    }
    c.c_tau = j.value("c_tau", 1.0);
    c.c_lambda = j.value("c_lambda", 1.0);
    c.C1 = j.value("C1", 1.0);
    c.sigma = j.value("sigma", 0.0);
    c.c_l = j.value("c_l", 0.0);
    c.lambda0 = j.value("lambda0", 1.0);
    c.c_beta = j.value("c_beta", 4.0);
    c.refresh_every = j.value("refresh_every", 1);
    c.sperp_const = j.value("sperp_const", 1.0);
    c.use_eq6_in_agnostic = j.value("use_eq6_in_agnostic", false);
    c.lamm_alpha0 = j.value("lamm_alpha0", 1e-3);
    c.lamm_psi = j.value("lamm_psi", 2.0);
    c.lamm_stop_eps = j.value("lamm_stop_eps", 1e-6);
    c.lamm_max_iters = j.value("lamm_max_iters", 500);
    c.warm_start = j.value("warm_start", true);
    c.randomized_refit_every = j.value("randomized_refit_every", 25);
  } else if (algo.name == "baseline-subg") {
    auto& b = algo.baseline;
    b.r = j.value("r", 1);
    b.D_rr = j.value("D_rr", 1.0);
    b.explore_scale = j.value("explore_scale", 1.0);
    b.delta_assumed = j.value("delta_assumed", 1.0);
    b.c_assumed = j.value("c_assumed", 1.0);
    b.eps = j.value("eps", 0.05);
    b.c_lambda = j.value("c_lambda", 1.0);
    b.lambda0 = j.value("lambda0", 1.0);
    b.c_beta = j.value("c_beta", 4.0);
    b.sperp_const = j.value("sperp_const", 1.0);
    b.sigma = j.value("sigma", 0.0);
    b.c_l = j.value("c_l", 0.0);
  } else {
    throw InputError("unknown algorithm: " + algo.name);
  }
  return algo;
}

json baseline_to_json(const BaselineConfig& b) {
  return json{{"r", b.r},
              {"D_rr", b.D_rr},
              {"explore_scale", b.explore_scale},
              {"delta_assumed", b.delta_assumed},
              {"c_assumed", b.c_assumed},
              {"eps", b.eps},
              {"c_lambda", b.c_lambda},
              {"lambda0", b.lambda0},
              {"c_beta", b.c_beta},
              {"sperp_const", b.sperp_const},
              {"sigma", b.sigma},
              {"c_l", b.c_l}};
}

json algo_to_json(const AlgoSpec& a) {
  json j;
  j["name"] = a.name;
  if (a.name == "lotus") {
    j.update(lotus_to_json(a.lotus));
    if (a.delta_from_env) {  // delta and c are resolved from the noise model
      j.erase("delta");
      j.erase("c");
    }
  } else {
    j.update(baseline_to_json(a.baseline));
  }
  return j;
}

json env_to_json(const EnvSpec& e) {
  json j{{"scenario", e.scenario}, {"noise", noise_to_json(e.noise)}, {"seed", e.seed}};
  if (e.custom) {
    const auto& c = *e.custom;
    std::vector<std::vector<double>> theta(c.theta_star.rows());
    for (Index i = 0; i < c.theta_star.rows(); ++i)
      for (Index jj = 0; jj < c.theta_star.cols(); ++jj)
        theta[i].push_back(c.theta_star(i, jj));
    j["custom"] = json{{"d1", c.d1},
                       {"d2", c.d2},
                       {"theta_star", theta},
                       {"rank", c.rank},
                       {"arm_kind", c.arm_kind},
                       {"num_arms", c.num_arms},
                       {"arm_norm_bound", c.arm_norm_bound}};
  }
  return j;
}

EnvSpec env_from_json(const json& j) {
  EnvSpec e;
  e.scenario = j.value("scenario", "scenario1");
  if (j.contains("noise")) e.noise = noise_from_json(j.at("noise"));
  e.seed = j.value("seed", std::uint64_t{1});
  if (e.scenario == "custom") {
    if (!j.contains("custom")) throw InputError("custom scenario requires a custom block");
    const auto& cj = j.at("custom");
    CustomEnvSpec c;
    c.d1 = cj.at("d1").get<Index>();
    c.d2 = cj.at("d2").get<Index>();
    const auto theta = cj.at("theta_star").get<std::vector<std::vector<double>>>();
    if (static_cast<Index>(theta.size()) != c.d1)
      throw InputError("custom theta_star row count mismatch");
    c.theta_star.resize(c.d1, c.d2);
    for (Index i = 0; i < c.d1; ++i) {
      if (static_cast<Index>(theta[i].size()) != c.d2)
        throw InputError("custom theta_star column count mismatch");
      for (Index jj = 0; jj < c.d2; ++jj) c.theta_star(i, jj) = theta[i][jj];
    }
    c.rank = cj.at("rank").get<int>();
    c.arm_kind = cj.value("arm_kind", "fixed");
    c.num_arms = cj.value("num_arms", 500);
    c.arm_norm_bound = cj.value("arm_norm_bound", 1.0);
    e.custom = std::move(c);
  }
  return e;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) {
  json algos = json::array();
  for (const auto& a : config.algorithms) algos.push_back(algo_to_json(a));
  json j{{"schema_version", 1},
         {"environment", env_to_json(config.env)},
         {"algorithms", algos},
         {"horizon", config.horizon},
         {"replications", config.replications},
         {"base_seed", config.base_seed},
         {"format", config.format}};
  return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string text = config_to_json(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config parse error: ") + e.what());
  }
  try {
    ExperimentConfig config;
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1)
      throw InputError("unsupported schema_version");
    if (j.contains("environment")) config.env = env_from_json(j.at("environment"));
    if (j.contains("algorithm")) config.algorithms.push_back(algo_from_json(j.at("algorithm")));
    if (j.contains("algorithms"))
      for (const auto& a : j.at("algorithms")) config.algorithms.push_back(algo_from_json(a));
    config.horizon = j.value("horizon", 1000L);
    config.replications = j.value("replications", 1);
    config.base_seed = j.value("base_seed", std::uint64_t{1});
    config.out_dir = j.value("out_dir", "out");
    config.threads = j.value("threads", 1);
    config.format = j.value("format", "csv");
    return config;
  } catch (const json::exception& e) {
    throw InputError(std::string("config field error: ") + e.what());
  }
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_json(buffer.str());
}

ReplicationResult run_one(env::Bandit& env, const AlgoSpec& algo, long horizon,
                          std::uint64_t rep_seed) {
  trace::SimContext ctx(rep_seed);
  ReplicationResult result;
  if (algo.name == "baseline-subg") {
    BaselineConfig config = algo.baseline;
    result.trace = run_baseline_subgaussian(env, config, horizon, ctx);
    return result;
  }
  lotus::LotusConfig config = algo.lotus;
  if (algo.delta_from_env) {
    config.delta = env.noise_delta();
    config.c_moment = env.noise_c();
  }
  auto out = lotus::run_lotus(env, config, horizon, ctx);
  result.trace = std::move(out.regret);
  result.batches = std::move(out.batches);
  result.fit_warnings = out.fit_warnings;
  return result;
}

std::vector<ReplicationResult> run_replications(const ExperimentConfig& config,
                                                const AlgoSpec& algo) {
  auto proto = make_env(config.env);
  const int n = config.replications;
  std::vector<std::unique_ptr<env::Bandit>> envs;
  envs.reserve(n);
  for (int j = 0; j < n; ++j) envs.push_back(proto->clone());

  std::vector<ReplicationResult> results(n);
  const std::uint64_t hash = config_hash(config);
  auto work = [&](int j) {
    results[j] = run_one(*envs[j], algo, config.horizon, config.base_seed + j);
    results[j].trace.config_hash = hash;
  };
  const int threads = std::min(config.threads, n);
  if (threads <= 1) {
    for (int j = 0; j < n; ++j) work(j);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int j = next.fetch_add(1); j < n; j = next.fetch_add(1)) work(j);
      });
    for (auto& th : pool) th.join();
  }
  return results;
}

std::vector<double> compute_oracle_regret(env::Bandit& env, const std::vector<int>& chosen) {
  std::vector<double> regrets;
  regrets.reserve(chosen.size());
  for (std::size_t round = 0; round < chosen.size(); ++round) {
    const auto& arms = env.arms(static_cast<long>(round));
    const int idx = chosen[round];
    if (idx < 0 || idx >= static_cast<int>(arms.size()))
      throw InputError("compute_oracle_regret: arm index out of range");
    regrets.push_back(env.oracle_value(static_cast<long>(round)) -
                      env.mean_reward(arms[idx]));
  }
  return regrets;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trace_csv(const std::filesystem::path& path, const trace::RegretTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "round,batch,phase,arm_index,inst_regret,cum_regret\n";
  for (const auto& r : trace.rows)
    out << r.round << ',' << r.batch << ',' << trace::phase_name(r.phase) << ','
        << r.arm_index << ',' << format_double(r.inst_regret) << ','
        << format_double(r.cum_regret) << '\n';
}

void write_trace_json(const std::filesystem::path& path, const trace::RegretTrace& trace) {
  json rows = json::array();
  for (const auto& r : trace.rows)
    rows.push_back(json{{"round", r.round},
                        {"batch", r.batch},
                        {"phase", trace::phase_name(r.phase)},
                        {"arm_index", r.arm_index},
                        {"inst_regret", r.inst_regret},
                        {"cum_regret", r.cum_regret}});
  json j{{"config_hash", trace.config_hash}, {"seed", trace.seed}, {"rows", rows}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

trace::RegretTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  trace::RegretTrace trace;
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty trace file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    trace::Row row;
    std::getline(ss, field, ',');
    row.round = std::stol(field);
    std::getline(ss, field, ',');
    row.batch = std::stoi(field);
    std::getline(ss, field, ',');
    row.phase = trace::phase_from_name(field);
    std::getline(ss, field, ',');
    row.arm_index = std::stoi(field);
    std::getline(ss, field, ',');
    row.inst_regret = std::stod(field);
    std::getline(ss, field, ',');
    row.cum_regret = std::stod(field);
    trace.rows.push_back(row);
  }
  return trace;
}

void write_aggregate_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, const std::vector<ReplicationResult>*>>& runs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "round,algo,median_cumreg,q25,q75\n";
  for (const auto& [label, reps] : runs) {
    if (reps->empty()) continue;
    const std::size_t rounds = reps->front().trace.rows.size();
    std::vector<double> sample(reps->size());
    for (std::size_t r = 0; r < rounds; ++r) {
      for (std::size_t j = 0; j < reps->size(); ++j)
        sample[j] = (*reps)[j].trace.rows[r].cum_regret;
      out << (r + 1) << ',' << label << ',' << format_double(quantile(sample, 0.5)) << ','
          << format_double(quantile(sample, 0.25)) << ','
          << format_double(quantile(sample, 0.75)) << '\n';
    }
  }
}

namespace {

json batch_to_json(const lotus::BatchRecord& b) {
  return json{{"index", b.index},
              {"T1_planned", b.T1_planned},
              {"T1", b.T1},
              {"T2", b.T2},
              {"n_h2", b.n_h2},
              {"r_hat", b.r_hat},
              {"k", b.k},
              {"s_perp", b.s_perp},
              {"eps_i", b.eps_i},
              {"tau_i", b.tau_i},
              {"lambda_i", b.lambda_i},
              {"fit_converged", b.fit_converged},
              {"estimated", b.estimated},
              {"t1_precondition_ok", b.t1_precondition_ok}};
}

}  // namespace

std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  {  // fail before any simulation if the output directory is unusable
    const fs::path probe = dir / ".write_probe";
    std::ofstream test(probe, std::ios::binary);
    if (!test) throw InputError("output directory is not writable: " + dir.string());
    test.close();
    fs::remove(probe, ec);
  }

  std::vector<fs::path> written;
  std::vector<std::pair<std::string, std::vector<ReplicationResult>>> all_runs;
  for (const auto& algo : config.algorithms)
    all_runs.emplace_back(algo.label(), run_replications(config, algo));

  json summary;
  summary["schema_version"] = 1;
  summary["version"] = kVersion;
  summary["config"] = json::parse(config_to_json(config));
  {
    char hex[19];
    std::snprintf(hex, sizeof(hex), "0x%016llx",
                  static_cast<unsigned long long>(config_hash(config)));
    summary["config_hash"] = hex;
  }

  json results;
  for (const auto& [label, reps] : all_runs) {
    for (std::size_t j = 0; j < reps.size(); ++j) {
      const fs::path p =
          dir / ("trace_" + label + "_rep" + std::to_string(j) + "." + config.format);
      if (config.format == "json")
        write_trace_json(p, reps[j].trace);
      else
        write_trace_csv(p, reps[j].trace);
      written.push_back(p);
    }
    std::vector<double> finals;
    json rep_json = json::array();
    int warnings = 0;
    for (const auto& rep : reps) {
      finals.push_back(rep.trace.final_cum_regret());
      warnings += rep.fit_warnings;
      json batches = json::array();
      for (const auto& b : rep.batches) batches.push_back(batch_to_json(b));
      rep_json.push_back(json{{"seed", rep.trace.seed},
                              {"final_cum_regret", rep.trace.final_cum_regret()},
                              {"batches", batches}});
    }
    results[label] = json{{"final_cum_regret", finals},
                          {"median_final_cum_regret", quantile(finals, 0.5)},
                          {"q25_final_cum_regret", quantile(finals, 0.25)},
                          {"q75_final_cum_regret", quantile(finals, 0.75)},
                          {"fit_warnings", warnings},
                          {"replications", rep_json}};
  }
  summary["results"] = results;

  std::vector<std::pair<std::string, const std::vector<ReplicationResult>*>> agg;
  for (const auto& [label, reps] : all_runs) agg.emplace_back(label, &reps);
  const fs::path agg_path = dir / "aggregate.csv";
  write_aggregate_csv(agg_path, agg);
  written.push_back(agg_path);

  const fs::path summary_path = dir / "summary.json";
  {
    std::ofstream out(summary_path, std::ios::binary);
    if (!out) throw InputError("cannot write " + summary_path.string());
    out << summary.dump(2) << '\n';
  }
  written.push_back(summary_path);
  return written;
}

}  // namespace lowhtr::harness
