#include <doctest.h>

#include <cmath>

#include "lowhtr/common.hpp"
#include "lowhtr/env.hpp"
#include "lowhtr/huber.hpp"
#include "lowhtr/rng.hpp"

using namespace lowhtr;
using linalg::Index;
using linalg::Matrix;
using linalg::Vector;

namespace {

Matrix random_matrix(Index d1, Index d2, rng::Engine& rng, double scale = 1.0) {
  Matrix m(d1, d2);
  for (Index j = 0; j < d2; ++j)
    for (Index i = 0; i < d1; ++i) m(i, j) = scale * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("huber loss values and smoothness at the knee") {
  CHECK(huber::huber_loss(1.0, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(huber::huber_loss(3.0, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(huber::huber_loss(-3.0, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
  const double tau = 1.3;
  const double eps = 1e-9;
  CHECK(std::fabs(huber::huber_loss(tau + eps, tau) - huber::huber_loss(tau - eps, tau)) <
        1e-8);
  CHECK(std::fabs(huber::huber_grad(tau + eps, tau) - huber::huber_grad(tau - eps, tau)) <
        1e-8);
  CHECK_THROWS_AS(huber::huber_loss(1.0, 0.0), InputError);
}

TEST_CASE("huber gradient clips") {
  CHECK(huber::huber_grad(0.5, 1.0) == 0.5);
  CHECK(huber::huber_grad(5.0, 2.0) == 2.0);
  CHECK(huber::huber_grad(-5.0, 2.0) == -2.0);
}

TEST_CASE("objective_and_grad closed-form cases") {
  huber::RegressionData data(2, 2);
  Matrix e11 = Matrix::Zero(2, 2);
  e11(0, 0) = 1.0;

  SUBCASE("zero residual") {
    data.append(e11, 3.0);
    Matrix theta = Matrix::Zero(2, 2);
    theta(0, 0) = 3.0;
    auto [loss, grad] = huber::objective_and_grad(theta, data, 5.0);
    CHECK(loss == 0.0);
    CHECK(grad.norm() == 0.0);
  }

  SUBCASE("single unit-entry design") {
    data.append(e11, 3.0);
    auto [loss, grad] = huber::objective_and_grad(Matrix::Zero(2, 2), data, 10.0);
    CHECK(loss == doctest::Approx(4.5).epsilon(1e-15));
    CHECK(grad(0, 0) == doctest::Approx(-3.0).epsilon(1e-15));
    CHECK(std::fabs(grad(0, 1)) + std::fabs(grad(1, 0)) + std::fabs(grad(1, 1)) == 0.0);
  }
}

TEST_CASE("gradient matches central finite differences") {
  rng::Engine rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Index d1 = 2 + rng.uniform_int(3);
    const Index d2 = 2 + rng.uniform_int(3);
    huber::RegressionData data(d1, d2);
    const long n = 4 + rng.uniform_int(20);
    for (long i = 0; i < n; ++i) data.append(random_matrix(d1, d2, rng, 0.6), rng.normal());
    const double tau = 0.4 + 2.0 * rng.uniform();
    Matrix theta = random_matrix(d1, d2, rng, 0.5);
    auto [loss, grad] = huber::objective_and_grad(theta, data, tau);
    (void)loss;
    const double h = 1e-6;
    for (Index j = 0; j < d2; ++j)
      for (Index i = 0; i < d1; ++i) {
        Matrix tp = theta, tm = theta;
        tp(i, j) += h;
        tm(i, j) -= h;
        const double fd = (huber::objective_and_grad(tp, data, tau).first -
                           huber::objective_and_grad(tm, data, tau).first) /
                          (2 * h);
        CHECK(std::fabs(grad(i, j) - fd) < 1e-5 * std::max(1.0, std::fabs(fd)));
      }
  }
}

TEST_CASE("lamm recovers a noiseless low-rank target") {
  rng::Engine rng(32);
  const Index d = 6;
  Matrix theta_star = random_matrix(d, 2, rng) * random_matrix(2, d, rng);
  huber::RegressionData data(d, d);
  const long n = 10 * d * d;
  for (long i = 0; i < n; ++i) {
    Matrix x = env::sample_ball_design(d, d, 1.0, rng);
    data.append(x, theta_star.cwiseProduct(x).sum());
  }
  huber::HuberConfig config;
  config.tau = 1e9;
  config.lambda_nuc = 1e-6;
  auto fit = huber::lamm_solve(data, config, Matrix::Zero(d, d));
  CHECK((fit.theta_hat - theta_star).norm() / theta_star.norm() < 1e-3);
  CHECK(fit.converged);
}

TEST_CASE("lamm single-coordinate solution matches the 1-d prox fixed point") {
  huber::RegressionData data(2, 2);
  Matrix e11 = Matrix::Zero(2, 2);
  e11(0, 0) = 1.0;
  data.append(e11, 5.0);
  huber::HuberConfig config;
  config.tau = 100.0;
  config.lambda_nuc = 1.0;
  config.stop_eps = 1e-10;
  auto fit = huber::lamm_solve(data, config, Matrix::Zero(2, 2));

  // 1-d oracle by bisection on the optimality condition of
  // min_t l_tau(5 - t) + |t| over t in (0, 5): g(t) = t - 5 + 1.
  double lo = 0.0, hi = 5.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = -huber::huber_grad(5.0 - mid, 100.0) + 1.0;
    (g > 0.0 ? hi : lo) = mid;
  }
  const double oracle = 0.5 * (lo + hi);
  CHECK(oracle == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(fit.theta_hat(0, 0) == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(fit.theta_hat(0, 0) > 0.0);
  CHECK(fit.theta_hat(0, 0) < 5.0);
  CHECK(std::fabs(fit.theta_hat(1, 0)) + std::fabs(fit.theta_hat(0, 1)) +
            std::fabs(fit.theta_hat(1, 1)) <
        1e-12);
}

TEST_CASE("a dominating penalty collapses the fit to zero") {
  rng::Engine rng(33);
  huber::RegressionData data(3, 3);
  double max_y = 0.0, max_x = 0.0;
  for (int i = 0; i < 20; ++i) {
    Matrix x = random_matrix(3, 3, rng);
    const double y = 3.0 * rng.normal();
    data.append(x, y);
    max_y = std::max(max_y, std::fabs(y));
    max_x = std::max(max_x, x.norm());
  }
  huber::HuberConfig config;
  config.tau = 50.0;
  config.lambda_nuc = 20.0 * max_y * max_x;  // >= n * max|y| * max||X||_F
  auto fit = huber::lamm_solve(data, config, Matrix::Zero(3, 3));
  CHECK(fit.theta_hat.norm() == 0.0);
}

TEST_CASE("lamm objective history is non-increasing") {
  rng::Engine rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    huber::RegressionData data(5, 5);
    Matrix theta_star = random_matrix(5, 1, rng) * random_matrix(1, 5, rng);
    for (int i = 0; i < 60; ++i) {
      Matrix x = random_matrix(5, 5, rng, 0.3);
      data.append(x, theta_star.cwiseProduct(x).sum() + rng.student_t(2.0));
    }
    huber::HuberConfig config;
    config.tau = 1.0 + rng.uniform();
    config.lambda_nuc = 0.05 + 0.2 * rng.uniform();
    auto fit = huber::lamm_solve(data, config, Matrix::Zero(5, 5));
    for (std::size_t i = 1; i < fit.objective_history.size(); ++i)
      CHECK(fit.objective_history[i] <= fit.objective_history[i - 1] + 1e-10);
  }
}

TEST_CASE("lamm flags non-convergence without failing") {
  rng::Engine rng(35);
  huber::RegressionData data(4, 4);
  for (int i = 0; i < 30; ++i) data.append(random_matrix(4, 4, rng), 5.0 * rng.normal());
  huber::HuberConfig config;
  config.tau = 2.0;
  config.lambda_nuc = 0.01;
  config.max_outer_iters = 1;
  config.stop_eps = 1e-14;
  auto fit = huber::lamm_solve(data, config, Matrix::Zero(4, 4));
  CHECK(!fit.converged);
  CHECK(fit.outer_iters == 1);
  CHECK(std::isfinite(fit.final_objective));
}

TEST_CASE("schedule_params matches the direct formula evaluation") {
  // tau = (n/(d + ln(1/eps)))^(1/(1+delta)) * c^(1/(1+delta)), frozen oracle value
  auto s = huber::schedule_params(1000, 10, 0.5, 1.0, 0.1, 1.0, 1.0, 0.1);
  CHECK(s.tau == doctest::Approx(18.764446060920505).epsilon(1e-12));
  CHECK(s.lambda == doctest::Approx(0.023085119438737155).epsilon(1e-12));

  SUBCASE("quadrupling n at delta = 1 exactly halves lambda") {
    auto a = huber::schedule_params(500, 10, 1.0, 2.0, 0.05, 1.0, 1.0, 0.1);
    auto b = huber::schedule_params(2000, 10, 1.0, 2.0, 0.05, 1.0, 1.0, 0.1);
    CHECK(a.lambda / b.lambda == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("delta = 1 specialization is a square root") {
    const long n = 777;
    const double c = 3.0;
    auto sch = huber::schedule_params(n, 10, 1.0, c, 0.1, 2.0, 1.0, 0.1);
    const double direct = 2.0 * std::sqrt(n / (10.0 + std::log(10.0))) * std::sqrt(c);
    CHECK(sch.tau == doctest::Approx(direct).epsilon(1e-12));
  }

  SUBCASE("monotonicity in n") {
    double prev_tau = 0.0, prev_lambda = 1e18;
    for (long n : {100, 400, 1600, 6400}) {
      auto sch = huber::schedule_params(n, 10, 0.5, 1.0, 0.1, 1.0, 1.0, 0.1);
      CHECK(sch.tau > prev_tau);
      CHECK(sch.lambda < prev_lambda);
      prev_tau = sch.tau;
      prev_lambda = sch.lambda;
    }
  }
}

TEST_CASE("estimate_useful_rank threshold scan") {
  // Parameters chosen so R(i) = 0.5 * sqrt(i): delta=1, c=1, sigma=c_l,
  // (d + ln(1/eps))/n = 1/4 with eps = 1, d = 10, n = 40, C1 = 1.
  Vector sv = Vector::Zero(10);
  sv[0] = 7.0;
  sv[1] = 4.0;
  sv[2] = 0.01;

  SUBCASE("first failing index 3 gives r_hat = 2") {
    CHECK(huber::estimate_useful_rank(sv, 40, 10, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0) == 2);
  }

  SUBCASE("everything below R(1) floors at 1") {
    Vector tiny = Vector::Constant(10, 0.01);
    CHECK(huber::estimate_useful_rank(tiny, 40, 10, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0) == 1);
  }

  SUBCASE("sentinel caps at d") {
    Vector huge = Vector::Constant(10, 1e6);
    CHECK(huber::estimate_useful_rank(huge, 40, 10, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0) == 10);
  }

  SUBCASE("never exceeds the first violation minus one") {
    rng::Engine rng(36);
    for (int trial = 0; trial < 50; ++trial) {
      Vector s = Vector::Zero(8);
      double v = 10.0 * rng.uniform();
      for (Index i = 0; i < 8; ++i) {
        s[i] = v;
        v *= rng.uniform();
      }
      const int r_hat = huber::estimate_useful_rank(s, 100, 8, 0.5, 2.0, 0.05, 0.3, 0.1, 1.0);
      CHECK(r_hat >= 1);
      CHECK(r_hat <= 8);
      const double base = 1.0 * (0.3 / 0.1) *
                          std::pow((8.0 + std::log(1.0 / 0.05)) / 100.0, 0.5 / 1.5) *
                          std::pow(2.0, 1.0 / 1.5);
      int first_fail = 9;
      for (Index i = 1; i <= 8; ++i)
        if (s[i - 1] <= base * std::sqrt(static_cast<double>(i))) {
          first_fail = static_cast<int>(i);
          break;
        }
      CHECK(r_hat <= std::max(first_fail - 1, 1));
    }
  }
}

TEST_CASE("regression data validates inputs") {
  huber::RegressionData data(2, 2);
  CHECK_THROWS_AS(data.append(Matrix::Zero(3, 2), 1.0), InputError);
  Matrix big = Matrix::Constant(2, 2, 10.0);
  CHECK_THROWS_AS(data.append(big, 1.0, 1.0), InputError);  // norm bound
  data.append(Matrix::Zero(2, 2), 1.0, 1.0);
  CHECK(data.n() == 1);
}
