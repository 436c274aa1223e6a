#pragma once

#include <stdexcept>
#include <string>

namespace lowhtr {

inline constexpr const char* kVersion = "0.1.0";

/// Violated input contract (bad arguments, malformed config, dimension
/// mismatch). The CLI maps these to exit code 1.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical-domain failure (non-SPD gram, non-finite values mid-run).
/// The CLI maps these to exit code 2.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, double detail = 0.0)
      : std::runtime_error(what), detail_(detail) {}
  /// Offending quantity when one exists (e.g. the eigenvalue that made a
  /// matrix fail its positive-definiteness check).
  double detail() const { return detail_; }

 private:
  double detail_;
};

}  // namespace lowhtr
