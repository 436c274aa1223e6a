#include "lowhtr/trace.hpp"

#include "lowhtr/common.hpp"

namespace lowhtr::trace {
namespace {
constexpr std::uint64_t kAlgoStream = 0x1b;
constexpr std::uint64_t kNoiseStream = 0x2e;
}  // namespace

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Warmup: return "warmup";
    case Phase::Explore: return "explore";
    case Phase::Exploit: return "exploit";
  }
  return "unknown";
}

Phase phase_from_name(const std::string& s) {
  if (s == "warmup") return Phase::Warmup;
  if (s == "explore") return Phase::Explore;
  if (s == "exploit") return Phase::Exploit;
  throw InputError("unknown phase name: " + s);
}

void RegretTrace::append(long round, int batch, Phase phase, int arm_index,
                         double inst_regret) {
  const double cum = (rows.empty() ? 0.0 : rows.back().cum_regret) + inst_regret;
  rows.push_back({round, batch, phase, arm_index, inst_regret, cum});
}

SimContext::SimContext(std::uint64_t seed)
    : rep_seed(seed), algo(rng::Engine::substream(seed, kAlgoStream)) {}

rng::Engine SimContext::noise_for_round(long round) const {
  return rng::Engine::substream(rep_seed, kNoiseStream, static_cast<std::uint64_t>(round));
}

}  // namespace lowhtr::trace
