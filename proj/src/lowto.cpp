#include "lowhtr/lowto.hpp"

#include <cmath>
#include <limits>

#include "lowhtr/common.hpp"
#include "lowhtr/kernels.hpp"

namespace lowhtr::lowto {
namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Vector diagonal_ridge(Index k, Index p, double lambda0, double lambda_perp) {
  Vector diag(p);
  diag.head(k).setConstant(lambda0);
  diag.tail(p - k).setConstant(lambda_perp);
  return diag;
}

}  // namespace

void LowTOParams::validate() const {
  if (!(delta > 0.0) || delta > 1.0) throw InputError("LowTOParams: delta in (0,1]");
  if (!(b_moment > 0.0)) throw InputError("LowTOParams: b_moment must be positive");
  if (!(eps > 0.0) || eps >= 1.0) throw InputError("LowTOParams: eps in (0,1)");
  if (!(S > 0.0)) throw InputError("LowTOParams: S must be positive");
  if (S_perp < 0.0) throw InputError("LowTOParams: S_perp must be non-negative");
  if (!(lambda0 > 0.0)) throw InputError("LowTOParams: lambda0 must be positive");
  if (lambda_perp < lambda0) throw InputError("LowTOParams: lambda_perp must be >= lambda0");
  if (!(c_beta > 0.0)) throw InputError("LowTOParams: c_beta must be positive");
  if (refresh_every < 1) throw InputError("LowTOParams: refresh_every must be >= 1");
}

double moment_bound(double delta, double S, double c) {
  return std::pow(2.0, delta) * (S * S + c);
}

double lambda_perp_schedule(double S, long T2, long H, Index k, double lambda0) {
  if (T2 <= 0) return lambda0;
  const double T = static_cast<double>(T2 + H);
  const double kd = static_cast<double>(k);
  const double value =
      S * S * static_cast<double>(T2) / (kd * std::log(1.0 + S * S * T / (kd * lambda0)));
  return std::max(lambda0, value);
}

LowTOState::LowTOState(Index k, Index p, double lambda0, double lambda_perp)
    : k_(k), p_(p), lambda0_(lambda0), lambda_perp_(lambda_perp) {
  if (k < 0 || k > p || p < 1) throw InputError("LowTOState: invalid dimension split");
  if (!(lambda0 > 0.0) || lambda_perp < lambda0)
    throw InputError("LowTOState: need lambda_perp >= lambda0 > 0");
  gram_ = diagonal_ridge(k, p, lambda0, lambda_perp).asDiagonal();
  design_.resize(p, 64);
  xty_ = Vector::Zero(p);
}

void LowTOState::append(const Vector& x, double y) {
  if (x.size() != p_) throw InputError("LowTOState: observation dimension mismatch");
  if (n_ == design_.cols()) {
    Matrix grown(p_, design_.cols() * 2);
    grown.leftCols(n_) = design_.leftCols(n_);
    design_ = std::move(grown);
  }
  design_.col(n_) = x;
  rewards_.push_back(y);
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(x);
  gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
  xty_ += x * y;
  ++n_;
}

LowTOState init_state(std::span<const std::pair<Vector, double>> history, double lambda0,
                      double lambda_perp, Index k, Index p) {
  LowTOState state(k, p, lambda0, lambda_perp);
  for (const auto& [x, y] : history) state.append(x, y);
  state.mark_history_complete();
  return state;
}

double compute_bt(long t, const LowTOParams& params, long H, Index p) {
  const double log_term = std::log(2.0 * static_cast<double>(p) / params.eps);
  const double expo = (1.0 - params.delta) / (2.0 + 2.0 * params.delta);
  return std::pow(params.b_moment / log_term, 1.0 / (1.0 + params.delta)) *
         std::pow(static_cast<double>(t + H), expo);
}

double compute_beta(long t, const LowTOParams& params, long H, Index p) {
  const double log_term = std::log(2.0 * static_cast<double>(p) / params.eps);
  const double expo = (1.0 - params.delta) / (2.0 + 2.0 * params.delta);
  const double trunc = params.c_beta * std::sqrt(static_cast<double>(p)) *
                       std::pow(params.b_moment, 1.0 / (1.0 + params.delta)) *
                       std::pow(log_term, params.delta / (1.0 + params.delta)) *
                       std::pow(static_cast<double>(t + H), expo);
  return trunc + std::sqrt(params.lambda0) * params.S +
         std::sqrt(params.lambda_perp) * params.S_perp;
}

Vector estimate_theta(const LowTOState& state, double b_t) {
  if (b_t < 0.0) throw InputError("estimate_theta: negative truncation level");
  if (std::isinf(b_t)) {
    // Nothing is ever truncated: theta = M^(-1/2) (M^(-1/2) X^T) y = M^{-1} X^T y.
    Eigen::LLT<Matrix> llt(state.gram());
    if (llt.info() != Eigen::Success)
      throw NumericError("estimate_theta: gram matrix is not positive definite");
    return llt.solve(state.design_response());
  }
  const Matrix r = linalg::sym_inv_sqrt(state.gram());
  const long n = state.n();
  Vector z = Vector::Zero(state.p());
  if (n > 0) {
    RowMajorMatrix u = r * state.design_cols();
    const auto rewards = state.rewards();
    const auto& ops = kernels::active_ops();
    for (Index i = 0; i < state.p(); ++i)
      z[i] = ops.truncated_dot(u.data() + i * n, rewards.data(), n, b_t);
  }
  return r * z;
}

int select_arm(const LowTOState& state, const Vector& theta_hat, const Matrix& arm_cols,
               double beta) {
  if (arm_cols.cols() == 0) throw InputError("select_arm: empty arm set");
  if (arm_cols.rows() != state.p()) throw InputError("select_arm: arm dimension mismatch");
  Eigen::LLT<Matrix> llt(state.gram());
  if (llt.info() != Eigen::Success)
    throw NumericError("select_arm: gram matrix is not positive definite");
  Matrix w = llt.matrixL().solve(arm_cols);
  Vector widths = w.colwise().norm();
  Vector scores = arm_cols.transpose() * theta_hat + beta * widths;
  int best = 0;
  for (int j = 1; j < scores.size(); ++j)
    if (scores[j] > scores[best]) best = j;
  return best;
}

void update(LowTOState& state, const Vector& x, double y) {
  state.append(x, y);
  state.advance_round();
}

RunResult run_lowto(LowTOState& state, const LowTOParams& params, env::Bandit& env,
                    const SubspaceSplit& split, long rounds, long global_round_start,
                    int batch_index, const trace::SimContext& ctx) {
  params.validate();
  RunResult out;
  if (rounds <= 0) return out;
  out.observations.reserve(rounds);
  out.rows.reserve(rounds);

  Matrix fixed_arm_cols;
  if (env.fixed_arms()) {
    const auto& arms = env.arms(global_round_start);
    fixed_arm_cols.resize(state.p(), static_cast<Index>(arms.size()));
    for (std::size_t j = 0; j < arms.size(); ++j)
      fixed_arm_cols.col(static_cast<Index>(j)) = linalg::rotate_and_vectorize(arms[j], split);
  }

  Vector theta_hat;
  long last_refresh = -1;
  for (long i = 0; i < rounds; ++i) {
    const long round = global_round_start + i;  // 0-based global index
    const long done = state.t();
    const double b =
        params.truncation_enabled ? compute_bt(done, params, state.H(), state.p())
                                  : std::numeric_limits<double>::infinity();
    if (last_refresh < 0 || done - last_refresh >= params.refresh_every) {
      theta_hat = estimate_theta(state, b);
      last_refresh = done;
    }
    const double beta = compute_beta(done, params, state.H(), state.p());

    const auto& arms = env.arms(round);
    int chosen;
    if (env.fixed_arms()) {
      chosen = select_arm(state, theta_hat, fixed_arm_cols, beta);
    } else {
      Matrix cols(state.p(), static_cast<Index>(arms.size()));
      for (std::size_t j = 0; j < arms.size(); ++j)
        cols.col(static_cast<Index>(j)) = linalg::rotate_and_vectorize(arms[j], split);
      chosen = select_arm(state, theta_hat, cols, beta);
    }

    const Matrix& x_matrix = arms[chosen];
    auto noise_rng = ctx.noise_for_round(round);
    const double y = env.reward(x_matrix, noise_rng);
    const double regret = env.oracle_value(round) - env.mean_reward(x_matrix);

    out.rows.push_back({round + 1, batch_index, trace::Phase::Exploit, chosen, regret, 0.0});
    out.observations.emplace_back(x_matrix, y);
    update(state, linalg::rotate_and_vectorize(x_matrix, split), y);
  }
  return out;
}

}  // namespace lowhtr::lowto
