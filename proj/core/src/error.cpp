#include "spar/error.hpp"

namespace spar {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DegenerateSignal: return "DegenerateSignal";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::RankDeficientSubmatrix: return "RankDeficientSubmatrix";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

void rethrow_with_stage(const Error& e, std::string_view stage) {
  // The stored message already starts with the code name; strip it so the
  // new message reads "<Code>: [stage] detail".
  std::string msg = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
  throw Error(e.code(), "[" + std::string(stage) + "] " + msg);
}

}  // namespace spar
