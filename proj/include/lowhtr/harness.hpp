#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lowhtr/env.hpp"
#include "lowhtr/lotus.hpp"
#include "lowhtr/trace.hpp"

namespace lowhtr::harness {

using linalg::Index;
using linalg::Matrix;

struct CustomEnvSpec {
  Index d1 = 0;
  Index d2 = 0;
  Matrix theta_star;
  int rank = 0;
  std::string arm_kind = "fixed";  // "fixed" | "contextual"
  int num_arms = 500;              // fixed count or per-round count
  double arm_norm_bound = 1.0;
};

struct EnvSpec {
  std::string scenario = "scenario1";  // "scenario1" | "scenario2" | "custom"
  env::NoiseModel noise = env::NoiseModel::gaussian(1.0);
  std::uint64_t seed = 1;
  std::optional<CustomEnvSpec> custom;
};

std::unique_ptr<env::Bandit> make_env(const EnvSpec& spec);

/// Sub-Gaussian explore-then-commit stand-in comparator ("baseline-subg").
/// One-shot exploration of ceil(explore_scale * sqrt(d^3 r T) / D_rr) rounds,
/// square-loss nuclear-norm estimation (Huber with tau = 1e9), then a
/// LowOFUL-style exploitation phase: LowTO with truncation disabled.
/// Requires the horizon upfront (not anytime).
struct BaselineConfig {
  int r = 1;
  double D_rr = 1.0;
  double explore_scale = 1.0;
  double delta_assumed = 1.0;  // the baseline pretends noise is sub-Gaussian
  double c_assumed = 1.0;
  double eps = 0.05;
  double c_lambda = 1.0;
  double lambda0 = 1.0;
  double c_beta = 4.0;
  double sperp_const = 1.0;
  double sigma = 0.0;  // 0 = sqrt(1/(d1 d2))
  double c_l = 0.0;    // 0 = 1/(d1 d2)

  void validate() const;
};

trace::RegretTrace run_baseline_subgaussian(env::Bandit& env, const BaselineConfig& config,
                                            long total_rounds, trace::SimContext& ctx);

struct AlgoSpec {
  std::string name = "lotus";  // "lotus" | "baseline-subg"
  lotus::LotusConfig lotus;
  BaselineConfig baseline;
  bool delta_from_env = true;  // fill delta / c_moment from the noise model
  std::string label() const;
};

struct ExperimentConfig {
  EnvSpec env;
  std::vector<AlgoSpec> algorithms;  // one for simulate, several for bench
  long horizon = 1000;
  int replications = 1;
  std::uint64_t base_seed = 1;
  std::string out_dir = "out";
  int threads = 1;
  std::string format = "csv";  // trace file format: "csv" | "json"

  void validate() const;
};

/// Canonical JSON echo of a config; hashed into trace metadata.
std::string config_to_json(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

/// Parses the experiment config tree (see README for the schema). Throws
/// InputError with a one-line diagnostic on malformed input.
ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

struct ReplicationResult {
  trace::RegretTrace trace;
  std::vector<lotus::BatchRecord> batches;  // empty for the baseline
  int fit_warnings = 0;
};

/// One full simulation of one algorithm (seed = base_seed + replication).
ReplicationResult run_one(env::Bandit& env_proto, const AlgoSpec& algo, long horizon,
                          std::uint64_t rep_seed);

/// All replications of one algorithm, replication-level parallelism only;
/// results are merged by replication index so thread count never changes
/// the artifacts.
std::vector<ReplicationResult> run_replications(const ExperimentConfig& config,
                                                const AlgoSpec& algo);

/// Runs every configured algorithm and persists per-replication traces, an
/// aggregate CSV (median/quartile cumulative regret per round) and a JSON
/// summary under out_dir. Returns the paths written.
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& config);

/// Exact regrets of a replayed arm-index sequence against the per-round
/// oracle maximizer.
std::vector<double> compute_oracle_regret(env::Bandit& env, const std::vector<int>& chosen);

/// Linear-interpolation quantile (type 7) used by every aggregate.
double quantile(std::vector<double> values, double q);

void write_trace_csv(const std::filesystem::path& path, const trace::RegretTrace& trace);
void write_trace_json(const std::filesystem::path& path, const trace::RegretTrace& trace);
trace::RegretTrace read_trace_csv(const std::filesystem::path& path);

/// Rows: round,algo,median_cumreg,q25,q75 for every algorithm label.
void write_aggregate_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, const std::vector<ReplicationResult>*>>& runs);

/// 17 significant digits; round-trips doubles losslessly.
std::string format_double(double v);

}  // namespace lowhtr::harness
