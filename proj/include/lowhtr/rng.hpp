#pragma once

#include <cstdint>
#include <random>

namespace lowhtr::rng {

/// SplitMix64 step; used for seed mixing and sub-stream derivation.
std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes a base seed with a stream tag and index into an independent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

/// Deterministic random engine with explicit samplers.
///
/// std::mt19937_64 output is fully specified by the standard; the
/// distribution samplers are implemented here (not via std::*_distribution,
/// whose output is implementation-defined) so that a seed pins the whole
/// stream on every platform.
class Engine {
 public:
  explicit Engine(std::uint64_t seed);

  /// Independent stream addressed by (seed, stream, index).
  static Engine substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

  std::uint64_t next_u64();

  double uniform();         // [0, 1), 53-bit resolution
  double uniform_strict();  // (0, 1), safe for log/pow inversions
  double uniform(double lo, double hi);
  std::int64_t uniform_int(std::int64_t n);  // unbiased, [0, n)

  double normal();                    // standard normal, Box-Muller
  double gamma(double shape);         // unit scale, Marsaglia-Tsang
  double student_t(double nu);
  double laplace(double scale);
  double pareto_raw(double alpha);    // density a/(x+1)^(a+1) on x > 0
  bool bernoulli(double p);

 private:
  std::mt19937_64 gen_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace lowhtr::rng
