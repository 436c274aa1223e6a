#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lowhtr/rng.hpp"

namespace lowhtr::trace {

enum class Phase { Warmup, Explore, Exploit };

const char* phase_name(Phase p);
Phase phase_from_name(const std::string& s);

struct Row {
  long round = 0;  // 1-based
  int batch = 0;   // 0 = warm-up
  Phase phase = Phase::Warmup;
  int arm_index = 0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
};

struct RegretTrace {
  std::vector<Row> rows;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  void append(long round, int batch, Phase phase, int arm_index, double inst_regret);
  double final_cum_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }
};

/// Per-replication randomness: the algorithm stream is sequential, the noise
/// stream is keyed by round so arm choices never perturb it.
struct SimContext {
  std::uint64_t rep_seed = 0;
  rng::Engine algo;

  explicit SimContext(std::uint64_t seed);
  rng::Engine noise_for_round(long round) const;
};

}  // namespace lowhtr::trace
