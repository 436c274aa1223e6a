#pragma once

#include <string>
#include <vector>

namespace lowhtr::checks {

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Acceptance criteria 1..12. `quick` shrinks sample sizes for the CLI's
/// fast validate pass; the acceptance suite runs at full size.
std::vector<int> all_ids();
/// Fast subset run by `lowhtr validate` (0 = kernel-variant equivalence).
std::vector<int> quick_ids();
const char* check_name(int id);
CheckResult run_check(int id, bool quick);

}  // namespace lowhtr::checks
