#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "lowhtr/env.hpp"
#include "lowhtr/huber.hpp"
#include "lowhtr/lowto.hpp"
#include "lowhtr/trace.hpp"

namespace lowhtr::lotus {

using linalg::Index;
using linalg::Matrix;
using linalg::Vector;

enum class Mode { KnownRank, RankAgnostic, Randomized };

const char* mode_name(Mode m);

struct LotusConfig {
  Mode mode = Mode::RankAgnostic;
  int r = 0;         // required by KnownRank / Randomized
  double D_rr = 0.0; // required by KnownRank / Randomized
  long T0 = 50;
  double delta = 1.0;
  double c_moment = 1.0;
  double eps = 0.05;
  // Estimator constants (rates are pinned by the schedules; levels are knobs).
  double c_tau = 1.0;
  double c_lambda = 1.0;
  double C1 = 1.0;
  double sigma = 0.0;  // 0 = default sqrt(1/(d1*d2))
  double c_l = 0.0;    // 0 = default 1/(d1*d2)
  // LowTO constants.
  double lambda0 = 1.0;
  double c_beta = 4.0;
  int refresh_every = 1;
  // Complement-norm bound.
  double sperp_const = 1.0;
  bool use_eq6_in_agnostic = false;  // default: the rank-agnostic surrogate
  // LAMM solver.
  double lamm_alpha0 = 1e-3;
  double lamm_psi = 2.0;
  double lamm_stop_eps = 1e-6;
  int lamm_max_iters = 500;
  bool warm_start = true;
  // Randomized variant: refit cadence on exploit rounds (1 = every round).
  int randomized_refit_every = 25;

  double sigma_or_default(Index d1, Index d2) const;
  double c_l_or_default(Index d1, Index d2) const;
  void validate() const;
};

struct BatchRecord {
  int index = 0;
  long T1_planned = 0;  // schedule value
  long T1 = 0;          // exploration rounds actually run
  long T2 = 0;          // exploitation rounds actually run
  long n_h2 = 0;        // |H2| at estimation time
  Matrix theta_hat;     // empty when the batch ended before estimation
  int r_hat = 0;
  Index k = 0;
  double s_perp = 0.0;
  double eps_i = 0.0;
  double tau_i = 0.0;
  double lambda_i = 0.0;
  bool fit_converged = true;
  bool estimated = false;
  bool t1_precondition_ok = true;
};

struct HistoryBuffers {
  std::vector<std::pair<Matrix, double>> h1;
  std::vector<std::pair<Matrix, double>> h2;
};

/// Exploration length of batch i with the rank known:
/// T1 = min{ ceil([(d^(2+4delta) r^(1+delta) / D_rr^(2+2delta)) 2^(i(1+delta))]^(1/(1+3delta))), 2^i }.
long exploration_length(int i, int d, int r, double D_rr, double delta);

/// Rank-agnostic exploration length: T1 = min{ ceil(d * 2^(i(1+delta)/(1+2delta))), 2^i }.
long exploration_length_rank_agnostic(int i, int d, double delta);

/// Complement-norm bound, known-rank form:
/// S_perp = const * (r sigma^2 c^(2/(1+delta)) / (c_l^2 D_rr^2)) * ((d + ln(1/eps))/n)^(2delta/(1+delta)).
double compute_s_perp(long n_h2, int d, int r_used, double delta, double c, double eps_i,
                      double D_rr, double sigma, double c_l, double constant);

/// Rank-agnostic surrogate (no D_rr):
/// S_perp = C1 * (sigma/c_l) * r_hat^(3/2) * ((d + ln(1/eps))/n)^(delta/(1+delta)) * c^(1/(1+delta)).
double compute_s_perp_agnostic(long n_h2, int d, int r_hat, double delta, double c,
                               double eps_i, double sigma, double c_l, double C1);

struct RunOutput {
  trace::RegretTrace regret;
  std::vector<BatchRecord> batches;
  HistoryBuffers buffers;
  int fit_warnings = 0;
};

/// Batched run: warm-up, then batches of length 2^i alternating scheduled
/// exploration (feeding the penalized Huber fit) and LowTO exploitation.
/// The loop never reads total_rounds except as a stop signal, so truncating
/// a run yields a prefix of any longer run with the same seed.
RunOutput run_lotus(env::Bandit& env, const LotusConfig& config, long total_rounds,
                    trace::SimContext& ctx);

/// Appendix-style randomized variant: within batch i each round explores
/// with probability T1/2^i and otherwise plays one LowTO round against the
/// current estimate (refit every randomized_refit_every exploit rounds).
RunOutput run_randomized_lotus(env::Bandit& env, const LotusConfig& config, long total_rounds,
                               trace::SimContext& ctx);

/// Stepwise driver used by tests; run_lotus/run_randomized_lotus wrap it.
class Runner {
 public:
  Runner(env::Bandit& env, const LotusConfig& config, trace::SimContext& ctx);

  /// T0 uniform pulls into both buffers; no-op when the budget is smaller.
  void run_warmup(long budget);
  /// One deterministic explore-then-exploit batch, cut short by the budget.
  void run_batch(int i, long budget);
  /// One randomized batch (per-round explore coin).
  void run_randomized_batch(int i, long budget);

  long rounds_done() const { return round_; }
  const HistoryBuffers& buffers() const { return buffers_; }
  RunOutput take_output();

 private:
  void explore_round(int batch, trace::Phase phase);
  struct BatchSetup;
  BatchSetup estimate_and_split(int i, BatchRecord& record);

  env::Bandit& env_;
  LotusConfig config_;
  trace::SimContext& ctx_;
  huber::RegressionData h2_data_;
  HistoryBuffers buffers_;
  RunOutput out_;
  Matrix prev_theta_;
  long round_ = 0;
};

}  // namespace lowhtr::lotus
