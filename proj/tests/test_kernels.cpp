#include <doctest.h>

#include <cmath>
#include <vector>

#include "lowhtr/kernels.hpp"
#include "lowhtr/rng.hpp"

using namespace lowhtr;

TEST_CASE("huber loss sum on known values") {
  const std::vector<double> r = {1.0, 3.0, -3.0};
  const double sum = kernels::scalar_ops().huber_loss_sum(r.data(), r.size(), 1.0);
  CHECK(sum == doctest::Approx(0.5 + 2.5 + 2.5).epsilon(1e-15));
}

TEST_CASE("huber clip matches closed form") {
  const std::vector<double> r = {0.5, 5.0, -5.0, 2.0, -2.0};
  std::vector<double> out(r.size());
  kernels::scalar_ops().huber_clip(r.data(), out.data(), r.size(), 2.0);
  const std::vector<double> want = {0.5, 2.0, -2.0, 2.0, -2.0};
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(out[i] == want[i]);
}

TEST_CASE("truncated dot keeps only small products") {
  const std::vector<double> u = {1.0, 2.0, -1.0};
  const std::vector<double> y = {3.0, 0.1, 0.5};
  // products: 3.0 (dropped), 0.2, -0.5 (kept at bound)
  const double got = kernels::scalar_ops().truncated_dot(u.data(), y.data(), 3, 0.5);
  CHECK(got == doctest::Approx(0.2 - 0.5).epsilon(1e-15));
}

TEST_CASE("kernel variants agree with the scalar reference") {
  rng::Engine rng(42);
  const auto variants = kernels::available_ops();
  CHECK(!variants.empty());
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(2048));
    std::vector<double> u(n), y(n);
    for (auto& v : u) v = rng.normal();
    for (auto& v : y) v = rng.student_t(1.7);
    const double tau = 0.2 + 2.0 * rng.uniform();
    // Exercise the comparison boundary with exact +-tau entries.
    if (n > 2) {
      y[0] = tau;
      y[1] = -tau;
    }
    const double bound = 0.1 + rng.uniform();
    const auto& ref = kernels::scalar_ops();
    const double loss0 = ref.huber_loss_sum(y.data(), n, tau);
    const double dot0 = ref.truncated_dot(u.data(), y.data(), n, bound);
    std::vector<double> clip0(n);
    ref.huber_clip(y.data(), clip0.data(), n, tau);
    for (const auto* ops : variants) {
      CHECK(ops->huber_loss_sum(y.data(), n, tau) ==
            doctest::Approx(loss0).epsilon(1e-12));
      CHECK(ops->truncated_dot(u.data(), y.data(), n, bound) ==
            doctest::Approx(dot0).epsilon(1e-12));
      std::vector<double> clip(n);
      ops->huber_clip(y.data(), clip.data(), n, tau);
      for (std::size_t i = 0; i < n; ++i) CHECK(clip[i] == clip0[i]);
    }
  }
}

TEST_CASE("active kernel selection is stable") {
  const auto& a = kernels::active_ops();
  const auto& b = kernels::active_ops();
  CHECK(&a == &b);
}
