#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace feedopt {

enum class ErrorCode {
  kDimensionMismatch,
  kNonFinite,
  kSingularMatrix,
  kSingularLyapunov,
  kNotHurwitz,
  kUnsupportedObjective,
  kDomainError,
  kDisconnectedGraph,
  kUnknownBus,
  kUnknownLine,
  kNotConverged,
  kInvalidCase,
  kParseError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; the code distinguishes failure
/// classes so callers (and the CLI exit-code mapping) can branch on them.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures of the numerical pipeline, as opposed to bad input.
  bool is_numerical() const noexcept {
    switch (code_) {
      case ErrorCode::kNonFinite:
      case ErrorCode::kSingularMatrix:
      case ErrorCode::kSingularLyapunov:
      case ErrorCode::kNotHurwitz:
      case ErrorCode::kNotConverged:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kSingularMatrix: return "SingularMatrix";
    case ErrorCode::kSingularLyapunov: return "SingularLyapunov";
    case ErrorCode::kNotHurwitz: return "NotHurwitz";
    case ErrorCode::kUnsupportedObjective: return "UnsupportedObjective";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kDisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::kUnknownBus: return "UnknownBus";
    case ErrorCode::kUnknownLine: return "UnknownLine";
    case ErrorCode::kNotConverged: return "NotConverged";
    case ErrorCode::kInvalidCase: return "InvalidCase";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace feedopt
