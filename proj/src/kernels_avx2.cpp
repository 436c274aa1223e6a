#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "lowhtr/kernels.hpp"

// Four-lane accumulators, horizontally reduced once at the end; lane order
// is fixed, so each call is bit-reproducible for given inputs.

namespace lowhtr::kernels {
namespace {

inline __m256d abs_pd(__m256d x) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  return _mm256_and_pd(x, mask);
}

inline double hsum_pd(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double huber_loss_sum_avx2(const double* r, std::size_t n, double tau) {
  const __m256d vtau = _mm256_set1_pd(tau);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d half_tau2 = _mm256_set1_pd(0.5 * tau * tau);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(r + i);
    const __m256d ax = abs_pd(x);
    const __m256d quad = _mm256_mul_pd(half, _mm256_mul_pd(x, x));
    const __m256d lin = _mm256_fmsub_pd(vtau, ax, half_tau2);
    const __m256d in_quad = _mm256_cmp_pd(ax, vtau, _CMP_LE_OQ);
    acc = _mm256_add_pd(acc, _mm256_blendv_pd(lin, quad, in_quad));
  }
  double total = hsum_pd(acc);
  for (; i < n; ++i) {
    const double x = r[i];
    const double ax = std::fabs(x);
    total += ax <= tau ? 0.5 * x * x : tau * ax - 0.5 * tau * tau;
  }
  return total;
}

void huber_clip_avx2(const double* r, double* out, std::size_t n, double tau) {
  const __m256d vtau = _mm256_set1_pd(tau);
  const __m256d vneg = _mm256_set1_pd(-tau);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(r + i);
    x = _mm256_min_pd(x, vtau);
    x = _mm256_max_pd(x, vneg);
    _mm256_storeu_pd(out + i, x);
  }
  for (; i < n; ++i) {
    const double x = r[i];
    out[i] = x > tau ? tau : (x < -tau ? -tau : x);
  }
}

double truncated_dot_avx2(const double* u, const double* y, std::size_t n, double bound) {
  const __m256d vb = _mm256_set1_pd(bound);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(u + i), _mm256_loadu_pd(y + i));
    const __m256d keep = _mm256_cmp_pd(abs_pd(p), vb, _CMP_LE_OQ);
    acc = _mm256_add_pd(acc, _mm256_and_pd(p, keep));
  }
  double total = hsum_pd(acc);
  for (; i < n; ++i) {
    const double p = u[i] * y[i];
    if (std::fabs(p) <= bound) total += p;
  }
  return total;
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops{huber_loss_sum_avx2, huber_clip_avx2, truncated_dot_avx2, "avx2"};
  return ops;
}

bool avx2_supported() { return __builtin_cpu_supports("avx2") != 0; }

}  // namespace lowhtr::kernels
