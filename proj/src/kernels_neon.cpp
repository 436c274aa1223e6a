#include <arm_neon.h>

#include <cmath>
#include <cstddef>

#include "lowhtr/kernels.hpp"

namespace lowhtr::kernels {
namespace {

inline double hsum_f64(float64x2_t v) { return vgetq_lane_f64(v, 0) + vgetq_lane_f64(v, 1); }

double huber_loss_sum_neon(const double* r, std::size_t n, double tau) {
  const float64x2_t vtau = vdupq_n_f64(tau);
  const float64x2_t half = vdupq_n_f64(0.5);
  const float64x2_t half_tau2 = vdupq_n_f64(0.5 * tau * tau);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t x = vld1q_f64(r + i);
    const float64x2_t ax = vabsq_f64(x);
    const float64x2_t quad = vmulq_f64(half, vmulq_f64(x, x));
    const float64x2_t lin = vsubq_f64(vmulq_f64(vtau, ax), half_tau2);
    const uint64x2_t in_quad = vcleq_f64(ax, vtau);
    acc = vaddq_f64(acc, vbslq_f64(in_quad, quad, lin));
  }
  double total = hsum_f64(acc);
  for (; i < n; ++i) {
    const double x = r[i];
    const double ax = std::fabs(x);
    total += ax <= tau ? 0.5 * x * x : tau * ax - 0.5 * tau * tau;
  }
  return total;
}

void huber_clip_neon(const double* r, double* out, std::size_t n, double tau) {
  const float64x2_t vtau = vdupq_n_f64(tau);
  const float64x2_t vneg = vdupq_n_f64(-tau);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t x = vld1q_f64(r + i);
    x = vminq_f64(x, vtau);
    x = vmaxq_f64(x, vneg);
    vst1q_f64(out + i, x);
  }
  for (; i < n; ++i) {
    const double x = r[i];
    out[i] = x > tau ? tau : (x < -tau ? -tau : x);
  }
}

double truncated_dot_neon(const double* u, const double* y, std::size_t n, double bound) {
  const float64x2_t vb = vdupq_n_f64(bound);
  const float64x2_t zero = vdupq_n_f64(0.0);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t p = vmulq_f64(vld1q_f64(u + i), vld1q_f64(y + i));
    const uint64x2_t keep = vcleq_f64(vabsq_f64(p), vb);
    acc = vaddq_f64(acc, vbslq_f64(keep, p, zero));
  }
  double total = hsum_f64(acc);
  for (; i < n; ++i) {
    const double p = u[i] * y[i];
    if (std::fabs(p) <= bound) total += p;
  }
  return total;
}

}  // namespace

const Ops& neon_ops() {
  static const Ops ops{huber_loss_sum_neon, huber_clip_neon, truncated_dot_neon, "neon"};
  return ops;
}

}  // namespace lowhtr::kernels
