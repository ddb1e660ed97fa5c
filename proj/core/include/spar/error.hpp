#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spar {

enum class ErrorCode {
  DimensionMismatch,
  NonFiniteEntry,
  EmptyMatrix,
  SingularDesign,
  InvalidConfig,
  NotPositiveDefinite,
  DegenerateSignal,
  ConvergenceFailure,
  SingularCovariance,
  UnsupportedDimension,
  Infeasible,
  RankDeficientSubmatrix,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI, the experiment runner) can map it to exit codes or tagged rows.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& what);

inline void require(bool condition, ErrorCode code, const char* what) {
  if (!condition) raise(code, what);
}

/// Re-throws `e` with `stage` prepended to the message, keeping the code.
[[noreturn]] void rethrow_with_stage(const Error& e, std::string_view stage);

}  // namespace spar
