#include <cstdlib>

#include "lowhtr/kernels.hpp"

namespace lowhtr::kernels {
namespace {

const Ops* select() {
  if (const char* force = std::getenv("LOWHTR_FORCE_SCALAR");
      force != nullptr && force[0] != '\0' && force[0] != '0') {
    return &scalar_ops();
  }
#if defined(LOWHTR_KERNELS_AVX2)
  if (avx2_supported()) return &avx2_ops();
#endif
#if defined(LOWHTR_KERNELS_NEON)
  return &neon_ops();
#endif
  return &scalar_ops();
}

}  // namespace

const Ops& active_ops() {
  static const Ops* chosen = select();
  return *chosen;
}

std::vector<const Ops*> available_ops() {
  std::vector<const Ops*> out{&scalar_ops()};
#if defined(LOWHTR_KERNELS_AVX2)
  if (avx2_supported()) out.push_back(&avx2_ops());
#endif
#if defined(LOWHTR_KERNELS_NEON)
  out.push_back(&neon_ops());
#endif
  return out;
}

}  // namespace lowhtr::kernels
