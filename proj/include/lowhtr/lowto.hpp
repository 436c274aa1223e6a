#pragma once

#include <span>
#include <utility>
#include <vector>

#include "lowhtr/env.hpp"
#include "lowhtr/linalg.hpp"
#include "lowhtr/trace.hpp"

namespace lowhtr::lowto {

using linalg::Index;
using linalg::Matrix;
using linalg::SubspaceSplit;
using linalg::Vector;

/// Constants of the exploitation phase, per-batch.
struct LowTOParams {
  double delta = 1.0;
  double b_moment = 1.0;  // b = 2^delta * S^2 + 2^delta * c
  double eps = 0.05;
  double S = 1.0;
  double S_perp = 0.0;
  double lambda0 = 1.0;
  double lambda_perp = 1.0;
  double c_beta = 4.0;
  long T2 = 0;                    // planned exploitation length
  bool truncation_enabled = true; // false = b_t treated as infinite (ridge path)
  int refresh_every = 1;          // whitened-design refresh cadence

  void validate() const;
};

/// E|y|^(1+delta) bound implied by the model: 2^delta * (S^2 + c).
double moment_bound(double delta, double S, double c);

/// Theorem-2 complement penalty lambda_perp = S^2 T2 / (k log(1 + S^2 T/(k lambda0)))
/// with T = T2 + H, clamped below at lambda0 so the complement is never
/// penalized less than the active block.
double lambda_perp_schedule(double S, long T2, long H, Index k, double lambda0);

/// Single-owner mutable bandit state: regularized gram, whitened-design
/// bookkeeping, raw rewards.
class LowTOState {
 public:
  LowTOState(Index k, Index p, double lambda0, double lambda_perp);

  void append(const Vector& x, double y);

  const Matrix& gram() const { return gram_; }
  /// p x n view of the design rows, stored as columns.
  Eigen::Ref<const Matrix> design_cols() const { return design_.leftCols(n_); }
  Eigen::Map<const Vector> rewards() const { return {rewards_.data(), n_}; }
  const Vector& design_response() const { return xty_; }  // X^T y, maintained incrementally
  Index k() const { return k_; }
  Index p() const { return p_; }
  long n() const { return n_; }  // H + t
  long H() const { return H_; }
  long t() const { return t_; }
  double lambda0() const { return lambda0_; }
  double lambda_perp() const { return lambda_perp_; }

  void mark_history_complete() { H_ = n_; t_ = 0; }
  void advance_round() { ++t_; }

 private:
  Index k_, p_;
  double lambda0_, lambda_perp_;
  Matrix gram_;
  Matrix design_;  // p x capacity, columns are observations
  std::vector<double> rewards_;
  Vector xty_;
  long n_ = 0, H_ = 0, t_ = 0;
};

/// Gram and buffers assembled from rotated history plus the split ridge
/// Lambda = diag(lambda0 x k, lambda_perp x (p-k)).
LowTOState init_state(std::span<const std::pair<Vector, double>> history, double lambda0,
                      double lambda_perp, Index k, Index p);

/// Truncation level b_t = (b / log(2p/eps))^(1/(1+delta)) * (t+H)^((1-delta)/(2+2delta)).
double compute_bt(long t, const LowTOParams& params, long H, Index p);

/// Confidence width beta_t = c_beta * sqrt(p) * b^(1/(1+delta)) * log(2p/eps)^(delta/(1+delta))
///   * (t+H)^((1-delta)/(2+2delta)) + sqrt(lambda0) S + sqrt(lambda_perp) S_perp.
double compute_beta(long t, const LowTOParams& params, long H, Index p);

/// Whitened truncated estimate: with R = M^(-1/2) and rows u_i of R X^T,
/// theta_hat = R [u_i . yhat_i]_i where yhat_{i,j} = y_j 1{|u_{i,j} y_j| <= b_t}
/// (two-sided). An infinite b_t short-circuits to the ridge solve M^{-1} X^T y.
Vector estimate_theta(const LowTOState& state, double b_t);

/// Optimistic arm choice over arm columns: argmax x.theta_hat + beta ||x||_{M^-1},
/// ties to the lowest index; norms via a symmetric factorization, never an
/// explicit inverse.
int select_arm(const LowTOState& state, const Vector& theta_hat, const Matrix& arm_cols,
               double beta);

/// Rank-one state update: gram += x x^T, row and reward appended, t += 1.
void update(LowTOState& state, const Vector& x, double y);

struct RunResult {
  std::vector<std::pair<Matrix, double>> observations;  // restored matrix arms
  std::vector<trace::Row> rows;                         // cum_regret filled by caller
};

/// Exploitation loop: per round rotates the arm set, estimates with b_{t-1},
/// selects optimistically, pulls through the environment and mirrors the
/// observation back into matrix form for the caller's history buffer.
RunResult run_lowto(LowTOState& state, const LowTOParams& params, env::Bandit& env,
                    const SubspaceSplit& split, long rounds, long global_round_start,
                    int batch_index, const trace::SimContext& ctx);

}  // namespace lowhtr::lowto
