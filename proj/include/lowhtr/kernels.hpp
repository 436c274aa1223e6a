#pragma once

#include <cstddef>
#include <vector>

namespace lowhtr::kernels {

/// Vectorizable inner loops shared by the Huber fit and the truncated
/// whitened-response estimator. Each variant implements the same
/// fixed-order arithmetic within a lane width, so results are deterministic
/// per variant; variants are equivalence-tested against the scalar
/// reference.
struct Ops {
  /// sum_i l_tau(r_i) with l_tau the Huber loss.
  double (*huber_loss_sum)(const double* r, std::size_t n, double tau);
  /// out_i = clamp(r_i, -tau, tau), the Huber score l'_tau.
  void (*huber_clip)(const double* r, double* out, std::size_t n, double tau);
  /// sum_i u_i * y_i * 1{ |u_i * y_i| <= bound }  (two-sided truncation).
  double (*truncated_dot)(const double* u, const double* y, std::size_t n, double bound);
  const char* name;
};

const Ops& scalar_ops();

#if defined(LOWHTR_KERNELS_AVX2)
const Ops& avx2_ops();
bool avx2_supported();
#endif
#if defined(LOWHTR_KERNELS_NEON)
const Ops& neon_ops();
#endif

/// Variant picked once per process: best supported ISA, or the scalar
/// reference when LOWHTR_FORCE_SCALAR is set in the environment.
const Ops& active_ops();

/// All variants the build carries and the CPU can run, scalar first.
std::vector<const Ops*> available_ops();

}  // namespace lowhtr::kernels
