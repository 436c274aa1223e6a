#include "lowhtr/lotus.hpp"

#include <cmath>

#include "lowhtr/common.hpp"

namespace lowhtr::lotus {
namespace {

long pow2(int i) {
  if (i < 0 || i > 62) throw InputError("batch index out of range");
  return 1L << i;
}

long ceil_clamp(double value, long hi) {
  if (!(value > 0.0)) return 1;
  const double c = std::ceil(value);
  if (c >= static_cast<double>(hi)) return hi;
  return std::max(1L, static_cast<long>(c));
}

}  // namespace

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::KnownRank: return "known_rank";
    case Mode::RankAgnostic: return "rank_agnostic";
    case Mode::Randomized: return "randomized";
  }
  return "unknown";
}

double LotusConfig::sigma_or_default(Index d1, Index d2) const {
  return sigma > 0.0 ? sigma : std::sqrt(1.0 / static_cast<double>(d1 * d2));
}

double LotusConfig::c_l_or_default(Index d1, Index d2) const {
  return c_l > 0.0 ? c_l : 1.0 / static_cast<double>(d1 * d2);
}

void LotusConfig::validate() const {
  if (T0 < 0) throw InputError("LotusConfig: T0 must be >= 0");
  if (!(delta > 0.0) || delta > 1.0) throw InputError("LotusConfig: delta in (0,1]");
  if (!(c_moment > 0.0)) throw InputError("LotusConfig: c_moment must be positive");
  if (!(eps > 0.0) || eps >= 1.0) throw InputError("LotusConfig: eps in (0,1)");
  if (mode != Mode::RankAgnostic) {
    if (r < 1) throw InputError("LotusConfig: mode requires the rank r");
    if (!(D_rr > 0.0)) throw InputError("LotusConfig: mode requires D_rr > 0");
  }
  if (mode == Mode::RankAgnostic && use_eq6_in_agnostic && !(D_rr > 0.0))
    throw InputError("LotusConfig: eq6 bound in rank-agnostic mode needs D_rr");
  if (!(lambda0 > 0.0)) throw InputError("LotusConfig: lambda0 must be positive");
  if (!(c_beta > 0.0)) throw InputError("LotusConfig: c_beta must be positive");
  if (refresh_every < 1) throw InputError("LotusConfig: refresh_every must be >= 1");
  if (randomized_refit_every < 1)
    throw InputError("LotusConfig: randomized_refit_every must be >= 1");
}

long exploration_length(int i, int d, int r, double D_rr, double delta) {
  if (i < 1) throw InputError("exploration_length: batch index must be >= 1");
  const long cap = pow2(i);
  const double num = std::pow(static_cast<double>(d), 2.0 + 4.0 * delta) *
                     std::pow(static_cast<double>(r), 1.0 + delta);
  const double den = std::pow(D_rr, 2.0 + 2.0 * delta);
  const double inner = (num / den) * std::pow(2.0, i * (1.0 + delta));
  return ceil_clamp(std::pow(inner, 1.0 / (1.0 + 3.0 * delta)), cap);
}

long exploration_length_rank_agnostic(int i, int d, double delta) {
  if (i < 1) throw InputError("exploration_length: batch index must be >= 1");
  const long cap = pow2(i);
  const double value =
      static_cast<double>(d) * std::pow(2.0, i * (1.0 + delta) / (1.0 + 2.0 * delta));
  return ceil_clamp(value, cap);
}

double compute_s_perp(long n_h2, int d, int r_used, double delta, double c, double eps_i,
                      double D_rr, double sigma, double c_l, double constant) {
  if (n_h2 < 1) throw InputError("compute_s_perp: n_h2 must be >= 1");
  const double rate = (static_cast<double>(d) + std::log(1.0 / eps_i)) /
                      static_cast<double>(n_h2);
  return constant * static_cast<double>(r_used) * sigma * sigma *
         std::pow(c, 2.0 / (1.0 + delta)) / (c_l * c_l * D_rr * D_rr) *
         std::pow(rate, 2.0 * delta / (1.0 + delta));
}

double compute_s_perp_agnostic(long n_h2, int d, int r_hat, double delta, double c,
                               double eps_i, double sigma, double c_l, double C1) {
  if (n_h2 < 1) throw InputError("compute_s_perp_agnostic: n_h2 must be >= 1");
  const double rate = (static_cast<double>(d) + std::log(1.0 / eps_i)) /
                      static_cast<double>(n_h2);
  return C1 * (sigma / c_l) * std::pow(static_cast<double>(r_hat), 1.5) *
         std::pow(rate, delta / (1.0 + delta)) * std::pow(c, 1.0 / (1.0 + delta));
}

Runner::Runner(env::Bandit& env, const LotusConfig& config, trace::SimContext& ctx)
    : env_(env), config_(config), ctx_(ctx), h2_data_(env.d1(), env.d2()) {
  config_.validate();
  if (config_.mode != Mode::RankAgnostic &&
      config_.r > std::min(env.d1(), env.d2()))
    throw InputError("LotusConfig: r exceeds min(d1, d2)");
  prev_theta_ = Matrix::Zero(env.d1(), env.d2());
}

void Runner::explore_round(int batch, trace::Phase phase) {
  const long round = round_;
  const int idx = env::exploration_sample(env_, round, ctx_.algo);
  const Matrix& x = env_.arms(round)[idx];
  auto noise_rng = ctx_.noise_for_round(round);
  const double y = env_.reward(x, noise_rng);
  const double regret = env_.oracle_value(round) - env_.mean_reward(x);
  out_.regret.append(round + 1, batch, phase, idx, regret);
  buffers_.h1.emplace_back(x, y);
  buffers_.h2.emplace_back(x, y);
  h2_data_.append(x, y, env_.S());
  ++round_;
}

void Runner::run_warmup(long budget) {
  for (long t = 0; t < config_.T0 && round_ < budget; ++t)
    explore_round(0, trace::Phase::Warmup);
}

struct Runner::BatchSetup {
  linalg::SubspaceSplit split;
  lowto::LowTOParams params;

  lowto::LowTOState make_state(const HistoryBuffers& buffers) const {
    std::vector<std::pair<Vector, double>> rotated;
    rotated.reserve(buffers.h1.size());
    for (const auto& [x, y] : buffers.h1)
      rotated.emplace_back(linalg::rotate_and_vectorize(x, split), y);
    return lowto::init_state(rotated, params.lambda0, params.lambda_perp,
                             split.effective_dim(), split.total_dim());
  }
};

Runner::BatchSetup Runner::estimate_and_split(int i, BatchRecord& record) {
  const int d = static_cast<int>(std::max(env_.d1(), env_.d2()));
  const double sigma = config_.sigma_or_default(env_.d1(), env_.d2());
  const double c_l = config_.c_l_or_default(env_.d1(), env_.d2());
  const long n_h2 = h2_data_.n();
  record.n_h2 = n_h2;

  auto schedule = huber::schedule_params(n_h2, d, config_.delta, config_.c_moment,
                                         record.eps_i, config_.c_tau, config_.c_lambda, sigma);
  record.tau_i = schedule.tau;
  record.lambda_i = schedule.lambda;

  huber::HuberConfig fit_config;
  fit_config.tau = schedule.tau;
  fit_config.lambda_nuc = schedule.lambda;
  fit_config.stop_eps = config_.lamm_stop_eps;
  fit_config.alpha0 = config_.lamm_alpha0;
  fit_config.psi = config_.lamm_psi;
  fit_config.max_outer_iters = config_.lamm_max_iters;
  const Matrix theta0 =
      config_.warm_start ? prev_theta_ : Matrix::Zero(env_.d1(), env_.d2());
  auto fit = huber::lamm_solve(h2_data_, fit_config, theta0);
  if (!fit.converged) {
    record.fit_converged = false;
    ++out_.fit_warnings;
  }
  prev_theta_ = fit.theta_hat;
  record.theta_hat = fit.theta_hat;
  record.estimated = true;

  int r_hat;
  if (config_.mode == Mode::RankAgnostic) {
    r_hat = huber::estimate_useful_rank(fit.svd.singular_values, n_h2, d, config_.delta,
                                        config_.c_moment, record.eps_i, sigma, c_l,
                                        config_.C1);
  } else {
    r_hat = config_.r;
  }
  record.r_hat = r_hat;

  auto split = linalg::SubspaceSplit::from_svd(fit.svd, r_hat);
  const Index k = split.effective_dim();
  const Index p = split.total_dim();
  record.k = k;

  double s_perp;
  if (config_.mode == Mode::RankAgnostic && !config_.use_eq6_in_agnostic) {
    s_perp = compute_s_perp_agnostic(n_h2, d, r_hat, config_.delta, config_.c_moment,
                                     record.eps_i, sigma, c_l, config_.C1);
  } else {
    s_perp = compute_s_perp(n_h2, d, config_.mode == Mode::RankAgnostic ? r_hat : config_.r,
                            config_.delta, config_.c_moment, record.eps_i, config_.D_rr,
                            sigma, c_l, config_.sperp_const);
  }
  record.s_perp = s_perp;

  const long H = static_cast<long>(buffers_.h1.size());
  const long T2_planned = pow2(i) - record.T1_planned;
  lowto::LowTOParams params;
  params.delta = config_.delta;
  params.b_moment = lowto::moment_bound(config_.delta, env_.S(), config_.c_moment);
  params.eps = record.eps_i;
  params.S = env_.S();
  params.S_perp = s_perp;
  params.lambda0 = config_.lambda0;
  params.lambda_perp = lowto::lambda_perp_schedule(env_.S(), T2_planned, H, k, config_.lambda0);
  params.c_beta = config_.c_beta;
  params.T2 = T2_planned;
  params.refresh_every = config_.refresh_every;
  return BatchSetup{std::move(split), params};
}

void Runner::run_batch(int i, long budget) {
  if (round_ >= budget) return;
  BatchRecord record;
  record.index = i;
  record.eps_i = config_.eps / std::pow(2.0, i + 1);
  const int d = static_cast<int>(std::max(env_.d1(), env_.d2()));
  record.T1_planned =
      config_.mode == Mode::RankAgnostic
          ? exploration_length_rank_agnostic(i, d, config_.delta)
          : exploration_length(i, d, config_.r, config_.D_rr, config_.delta);
  if (config_.mode != Mode::RankAgnostic) {
    const double needed =
        5.0 * std::pow(static_cast<double>(d), (1.0 + 2.0 * config_.delta) / config_.delta) *
        std::pow(static_cast<double>(config_.r), (1.0 + config_.delta) / (2.0 * config_.delta)) /
        std::pow(config_.D_rr, (1.0 + config_.delta) / config_.delta);
    record.t1_precondition_ok = static_cast<double>(record.T1_planned) >= needed;
  }

  while (record.T1 < record.T1_planned && round_ < budget) {
    explore_round(i, trace::Phase::Explore);
    ++record.T1;
  }
  if (record.T1 < record.T1_planned) {  // cut mid-exploration
    out_.batches.push_back(std::move(record));
    return;
  }

  auto setup = estimate_and_split(i, record);
  const long T2_budget = std::min(pow2(i) - record.T1, budget - round_);
  if (T2_budget > 0) {
    auto state = setup.make_state(buffers_);
    auto result =
        lowto::run_lowto(state, setup.params, env_, setup.split, T2_budget, round_, i, ctx_);
    for (const auto& row : result.rows)
      out_.regret.append(row.round, row.batch, row.phase, row.arm_index, row.inst_regret);
    for (auto& obs : result.observations) buffers_.h1.push_back(std::move(obs));
    record.T2 = static_cast<long>(result.rows.size());
    round_ += record.T2;
  }
  out_.batches.push_back(std::move(record));
}

void Runner::run_randomized_batch(int i, long budget) {
  if (round_ >= budget) return;
  BatchRecord record;
  record.index = i;
  record.eps_i = config_.eps / std::pow(2.0, i + 1);
  const int d = static_cast<int>(std::max(env_.d1(), env_.d2()));
  record.T1_planned = exploration_length(i, d, config_.r, config_.D_rr, config_.delta);
  const double p_explore =
      static_cast<double>(record.T1_planned) / static_cast<double>(pow2(i));

  std::optional<BatchSetup> setup;
  std::optional<lowto::LowTOState> state;
  long exploits_since_refit = 0;
  for (long t = 0; t < pow2(i) && round_ < budget; ++t) {
    const bool explore = ctx_.algo.bernoulli(p_explore);
    if (explore || h2_data_.n() == 0) {
      explore_round(i, trace::Phase::Explore);
      ++record.T1;
      if (setup) {
        // Keep the cached gram in sync: every observation lands in H1.
        const auto& [x, y] = buffers_.h1.back();
        lowto::update(*state, linalg::rotate_and_vectorize(x, setup->split), y);
      }
      continue;
    }
    if (!setup || exploits_since_refit >= config_.randomized_refit_every) {
      setup = estimate_and_split(i, record);
      state = setup->make_state(buffers_);
      exploits_since_refit = 0;
    }
    auto result = lowto::run_lowto(*state, setup->params, env_, setup->split, 1, round_,
                                   i, ctx_);
    const auto& row = result.rows.front();
    out_.regret.append(row.round, row.batch, row.phase, row.arm_index, row.inst_regret);
    buffers_.h1.push_back(std::move(result.observations.front()));
    ++record.T2;
    ++round_;
    ++exploits_since_refit;
  }
  out_.batches.push_back(std::move(record));
}

RunOutput Runner::take_output() {
  out_.buffers = std::move(buffers_);
  return std::move(out_);
}

namespace {

RunOutput drive(env::Bandit& env, const LotusConfig& config, long total_rounds,
                trace::SimContext& ctx, bool randomized) {
  if (total_rounds < 0) throw InputError("run_lotus: negative horizon");
  Runner runner(env, config, ctx);
  runner.run_warmup(total_rounds);
  for (int i = 1; runner.rounds_done() < total_rounds; ++i) {
    if (randomized)
      runner.run_randomized_batch(i, total_rounds);
    else
      runner.run_batch(i, total_rounds);
  }
  auto out = runner.take_output();
  out.regret.seed = ctx.rep_seed;
  return out;
}

}  // namespace

RunOutput run_lotus(env::Bandit& env, const LotusConfig& config, long total_rounds,
                    trace::SimContext& ctx) {
  if (config.mode == Mode::Randomized)
    return drive(env, config, total_rounds, ctx, true);
  return drive(env, config, total_rounds, ctx, false);
}

RunOutput run_randomized_lotus(env::Bandit& env, const LotusConfig& config, long total_rounds,
                               trace::SimContext& ctx) {
  LotusConfig c = config;
  c.mode = Mode::Randomized;
  return drive(env, c, total_rounds, ctx, true);
}

}  // namespace lowhtr::lotus
