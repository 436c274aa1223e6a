#include "lowhtr/rng.hpp"

#include <cmath>
#include <limits>

#include "lowhtr/common.hpp"

namespace lowhtr::rng {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= stream * 0xd1342543de82ef95ULL;
  std::uint64_t b = splitmix64(s);
  s ^= index * 0x2545f4914f6cdd1dULL;
  std::uint64_t c = splitmix64(s);
  return a ^ (b + 0x9e3779b97f4a7c15ULL) ^ c;
}

Engine::Engine(std::uint64_t seed) : gen_(seed) {}

Engine Engine::substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return Engine(derive_seed(seed, stream, index));
}

std::uint64_t Engine::next_u64() { return gen_(); }

double Engine::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Engine::uniform_strict() {
  // (x + 0.5) / 2^53 lies strictly inside (0, 1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Engine::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::int64_t Engine::uniform_int(std::int64_t n) {
  if (n <= 0) throw InputError("uniform_int: n must be positive");
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % un;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<std::int64_t>(x % un);
}

double Engine::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform_strict();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

double Engine::gamma(double shape) {
  if (!(shape > 0.0)) throw InputError("gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost: Gamma(a) = Gamma(a+1) * U^(1/a).
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform_strict(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_strict();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Engine::student_t(double nu) {
  if (!(nu > 0.0)) throw InputError("student_t: nu must be positive");
  const double z = normal();
  const double chi2 = 2.0 * gamma(nu / 2.0);  // chi-square with nu dof
  return z / std::sqrt(chi2 / nu);
}

double Engine::laplace(double scale) {
  if (!(scale > 0.0)) throw InputError("laplace: scale must be positive");
  const double p = uniform_strict();
  return p < 0.5 ? scale * std::log(2.0 * p) : -scale * std::log(2.0 * (1.0 - p));
}

double Engine::pareto_raw(double alpha) {
  if (!(alpha > 0.0)) throw InputError("pareto: alpha must be positive");
  return std::pow(uniform_strict(), -1.0 / alpha) - 1.0;
}

bool Engine::bernoulli(double p) { return uniform() < p; }

}  // namespace lowhtr::rng
