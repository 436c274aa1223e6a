#include "lowhtr/huber.hpp"

#include <cmath>

#include "lowhtr/common.hpp"
#include "lowhtr/kernels.hpp"

namespace lowhtr::huber {

RegressionData::RegressionData(Index d1, Index d2) : d1_(d1), d2_(d2) {
  if (d1 < 1 || d2 < 1) throw InputError("RegressionData: dimensions must be positive");
}

void RegressionData::reserve(Index capacity) {
  design_storage_.reserve(static_cast<std::size_t>(capacity) * dim());
  responses_.reserve(capacity);
}

void RegressionData::append(const Matrix& design, double response, double norm_bound) {
  if (design.rows() != d1_ || design.cols() != d2_)
    throw InputError("RegressionData: design dimension mismatch");
  if (!design.allFinite() || !std::isfinite(response))
    throw InputError("RegressionData: non-finite sample");
  if (norm_bound > 0.0 && design.norm() > norm_bound * (1.0 + 1e-12))
    throw InputError("RegressionData: design violates the norm bound");
  design_storage_.insert(design_storage_.end(), design.data(), design.data() + design.size());
  responses_.push_back(response);
  ++n_;
}

Matrix RegressionData::design(Index i) const {
  return Eigen::Map<const Matrix>(design_storage_.data() + i * dim(), d1_, d2_);
}

Eigen::Map<const Matrix> RegressionData::designs() const {
  return {design_storage_.data(), dim(), n_};
}

Eigen::Map<const Vector> RegressionData::responses() const {
  return {responses_.data(), n_};
}

double huber_loss(double x, double tau) {
  if (!(tau > 0.0)) throw InputError("huber_loss: tau must be positive");
  const double ax = std::fabs(x);
  return ax <= tau ? 0.5 * x * x : tau * ax - 0.5 * tau * tau;
}

double huber_grad(double x, double tau) {
  if (!(tau > 0.0)) throw InputError("huber_grad: tau must be positive");
  return x > tau ? tau : (x < -tau ? -tau : x);
}

namespace {

double smooth_loss(const Vector& residuals, double tau) {
  return kernels::active_ops().huber_loss_sum(residuals.data(), residuals.size(), tau) /
         static_cast<double>(residuals.size());
}

}  // namespace

std::pair<double, Matrix> objective_and_grad(const Matrix& theta, const RegressionData& data,
                                             double tau) {
  if (!(tau > 0.0)) throw InputError("objective_and_grad: tau must be positive");
  if (theta.rows() != data.d1() || theta.cols() != data.d2())
    throw InputError("objective_and_grad: theta dimension mismatch");
  if (data.n() == 0) throw InputError("objective_and_grad: empty data");
  const auto designs = data.designs();
  Eigen::Map<const Vector> theta_vec(theta.data(), theta.size());
  Vector residuals = data.responses() - designs.transpose() * theta_vec;
  const double loss = smooth_loss(residuals, tau);
  Vector clipped(residuals.size());
  kernels::active_ops().huber_clip(residuals.data(), clipped.data(), residuals.size(), tau);
  Vector grad_vec = designs * clipped * (-1.0 / static_cast<double>(data.n()));
  Matrix grad = Eigen::Map<const Matrix>(grad_vec.data(), data.d1(), data.d2());
  return {loss, grad};
}

void HuberConfig::validate() const {
  if (!(tau > 0.0)) throw InputError("HuberConfig: tau must be positive");
  if (!(lambda_nuc > 0.0)) throw InputError("HuberConfig: lambda_nuc must be positive");
  if (!(stop_eps > 0.0)) throw InputError("HuberConfig: stop_eps must be positive");
  if (!(psi > 1.0)) throw InputError("HuberConfig: psi must exceed 1");
  if (!(alpha0 > 0.0)) throw InputError("HuberConfig: alpha0 must be positive");
  if (max_outer_iters < 1) throw InputError("HuberConfig: max_outer_iters must be >= 1");
}

FitResult lamm_solve(const RegressionData& data, const HuberConfig& config,
                     const Matrix& theta0) {
  config.validate();
  if (data.n() == 0) throw InputError("lamm_solve: empty data");
  if (theta0.rows() != data.d1() || theta0.cols() != data.d2())
    throw InputError("lamm_solve: theta0 dimension mismatch");

  const auto designs = data.designs();
  auto residuals_at = [&](const Matrix& th) -> Vector {
    Eigen::Map<const Vector> vec(th.data(), th.size());
    return data.responses() - designs.transpose() * vec;
  };

  FitResult result;
  Matrix theta = theta0;
  double alpha = config.alpha0;
  double loss = smooth_loss(residuals_at(theta), config.tau);
  result.objective_history.push_back(loss + config.lambda_nuc * linalg::nuclear_norm(theta));

  bool converged = false;
  int iter = 0;
  for (; iter < config.max_outer_iters; ++iter) {
    auto [loss_prev, grad] = objective_and_grad(theta, data, config.tau);
    alpha = std::max(config.alpha0, alpha / config.psi);
    Matrix candidate;
    // Grow alpha until the isotropic quadratic majorizes the loss at the
    // proximal step it produces.
    for (;;) {
      candidate = linalg::svd_soft_threshold(theta - grad / alpha, config.lambda_nuc / alpha);
      Matrix diff = candidate - theta;
      const double quad =
          loss_prev + grad.cwiseProduct(diff).sum() + 0.5 * alpha * diff.squaredNorm();
      const double loss_cand = smooth_loss(residuals_at(candidate), config.tau);
      if (quad >= loss_cand) {
        loss = loss_cand;
        break;
      }
      alpha *= config.psi;
    }
    const double step = (candidate - theta).norm();
    theta = std::move(candidate);
    result.objective_history.push_back(loss + config.lambda_nuc * linalg::nuclear_norm(theta));
    if (step <= config.stop_eps) {
      converged = true;
      ++iter;
      break;
    }
  }

  result.theta_hat = std::move(theta);
  result.svd = linalg::full_svd(result.theta_hat);
  result.outer_iters = iter;
  result.final_objective = result.objective_history.back();
  result.converged = converged;
  return result;
}

Schedule schedule_params(long n, int d, double delta, double c, double eps, double c_tau,
                         double c_lambda, double sigma) {
  if (n < 1 || d < 1) throw InputError("schedule_params: n and d must be >= 1");
  if (!(delta > 0.0) || delta > 1.0) throw InputError("schedule_params: delta in (0,1]");
  if (!(eps > 0.0) || eps >= 1.0) throw InputError("schedule_params: eps in (0,1)");
  const double effective = static_cast<double>(d) + std::log(1.0 / eps);
  const double ratio = static_cast<double>(n) / effective;
  const double c_pow = std::pow(c, 1.0 / (1.0 + delta));
  Schedule s;
  s.tau = c_tau * std::pow(ratio, 1.0 / (1.0 + delta)) * c_pow;
  s.lambda = c_lambda * sigma * std::pow(1.0 / ratio, delta / (1.0 + delta)) * c_pow;
  return s;
}

int estimate_useful_rank(const Vector& singular_values, long n_h2, int d, double delta,
                         double c, double eps_batch, double sigma, double c_l, double C1) {
  if (singular_values.size() == 0) throw InputError("estimate_useful_rank: empty spectrum");
  if (n_h2 < 1) throw InputError("estimate_useful_rank: n_h2 must be >= 1");
  const double effective = static_cast<double>(d) + std::log(1.0 / eps_batch);
  const double rate = std::pow(effective / static_cast<double>(n_h2), delta / (1.0 + delta));
  const double base = C1 * (sigma / c_l) * rate * std::pow(c, 1.0 / (1.0 + delta));
  const int m = static_cast<int>(singular_values.size());
  int first_fail = m + 1;  // sentinel value 0 at position m+1 always fails
  for (int i = 1; i <= m; ++i) {
    if (singular_values[i - 1] <= base * std::sqrt(static_cast<double>(i))) {
      first_fail = i;
      break;
    }
  }
  return std::max(first_fail - 1, 1);
}

}  // namespace lowhtr::huber
