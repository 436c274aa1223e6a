#include <cmath>
#include <cstddef>

#include "lowhtr/kernels.hpp"

namespace lowhtr::kernels {
namespace {

double huber_loss_sum_scalar(const double* r, std::size_t n, double tau) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = r[i];
    const double ax = std::fabs(x);
    acc += ax <= tau ? 0.5 * x * x : tau * ax - 0.5 * tau * tau;
  }
  return acc;
}

void huber_clip_scalar(const double* r, double* out, std::size_t n, double tau) {
  for (std::size_t i = 0; i < n; ++i) {
    const double x = r[i];
    out[i] = x > tau ? tau : (x < -tau ? -tau : x);
  }
}

double truncated_dot_scalar(const double* u, const double* y, std::size_t n, double bound) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = u[i] * y[i];
    if (std::fabs(p) <= bound) acc += p;
  }
  return acc;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{huber_loss_sum_scalar, huber_clip_scalar, truncated_dot_scalar,
                       "scalar"};
  return ops;
}

}  // namespace lowhtr::kernels
