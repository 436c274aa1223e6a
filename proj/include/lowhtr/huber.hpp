#pragma once

#include <utility>
#include <vector>

#include "lowhtr/linalg.hpp"

namespace lowhtr::huber {

using linalg::Index;
using linalg::Matrix;
using linalg::Vector;

/// Trace-regression samples (X_i, y_i) with designs stacked column-major:
/// column i of `designs` is vec(X_i), so the smooth loss and its gradient
/// reduce to matrix-vector products plus elementwise kernels.
class RegressionData {
 public:
  RegressionData(Index d1, Index d2);

  void reserve(Index capacity);
  /// Appends a sample; when a norm bound is given, enforces ||X||_F <= bound.
  void append(const Matrix& design, double response, double norm_bound = 0.0);

  Index n() const { return n_; }
  Index d1() const { return d1_; }
  Index d2() const { return d2_; }
  Index dim() const { return d1_ * d2_; }
  double response(Index i) const { return responses_[i]; }
  Matrix design(Index i) const;

  /// dim x n view of the stacked designs.
  Eigen::Map<const Matrix> designs() const;
  Eigen::Map<const Vector> responses() const;

 private:
  Index d1_, d2_, n_ = 0;
  std::vector<double> design_storage_;   // column-major dim x capacity
  std::vector<double> responses_;
};

/// Huber loss: x^2/2 on |x| <= tau, tau|x| - tau^2/2 beyond.
double huber_loss(double x, double tau);
/// Its derivative: x on |x| <= tau, tau*sign(x) beyond.
double huber_grad(double x, double tau);

/// Smooth part of the penalized objective and its gradient:
/// loss = (1/n) sum_i l_tau(y_i - <X_i, theta>),
/// grad = -(1/n) sum_i l'_tau(y_i - <X_i, theta>) X_i.
std::pair<double, Matrix> objective_and_grad(const Matrix& theta, const RegressionData& data,
                                             double tau);

struct HuberConfig {
  double tau = 1.0;
  double lambda_nuc = 1.0;
  double stop_eps = 1e-6;
  double alpha0 = 1e-3;
  double psi = 2.0;
  int max_outer_iters = 500;

  void validate() const;
};

struct FitResult {
  Matrix theta_hat;
  linalg::SvdFactors svd;
  int outer_iters = 0;
  double final_objective = 0.0;
  bool converged = false;
  /// Penalized objective after every accepted outer step (non-increasing).
  std::vector<double> objective_history;
};

/// Majorize-minimize solver for the nuclear-norm penalized Huber objective.
/// Each outer step soft-thresholds a gradient step, with the quadratic
/// coefficient grown by psi until it majorizes the loss at the candidate.
/// Exhausting max_outer_iters flags the result non-converged, not an error.
FitResult lamm_solve(const RegressionData& data, const HuberConfig& config,
                     const Matrix& theta0);

struct Schedule {
  double tau = 0.0;
  double lambda = 0.0;
};

/// Robustification and penalty levels as functions of the sample size:
///   tau    = c_tau * (n / (d + ln(1/eps)))^(1/(1+delta)) * c^(1/(1+delta))
///   lambda = c_lambda * sigma * ((d + ln(1/eps)) / n)^(delta/(1+delta)) * c^(1/(1+delta))
Schedule schedule_params(long n, int d, double delta, double c, double eps, double c_tau,
                         double c_lambda, double sigma);

/// Useful rank: scans non-increasing singular values against the threshold
/// R(i) = C1 * (sigma * sqrt(i) / c_l) * ((d + ln(1/eps_batch)) / n_h2)^(delta/(1+delta)) * c^(1/(1+delta))
/// (the batch index is folded into eps_batch by the caller) and returns
/// (first failing index - 1) floored at 1; a zero sentinel past the last
/// value guarantees termination.
int estimate_useful_rank(const Vector& singular_values, long n_h2, int d, double delta,
                         double c, double eps_batch, double sigma, double c_l, double C1);

}  // namespace lowhtr::huber
