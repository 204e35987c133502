#pragma once

#include <stdexcept>
#include <string>

namespace gnep {

enum class ErrorCode {
  kDimensionMismatch,
  kForeignBlock,
  kInvalidFactor,
  kNegativeMultiplier,
  kMissingHessian,
  kDomain,
  kIndexOutOfRange,
  kBorderedSingular,
  kAllInnerFailed,
  kInitialCollision,
  kParse,
  kIo,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kForeignBlock: return "FOREIGN_BLOCK";
    case ErrorCode::kInvalidFactor: return "INVALID_FACTOR";
    case ErrorCode::kNegativeMultiplier: return "NEGATIVE_MULTIPLIER";
    case ErrorCode::kMissingHessian: return "MISSING_HESSIAN";
    case ErrorCode::kDomain: return "DOMAIN_VIOLATION";
    case ErrorCode::kIndexOutOfRange: return "INDEX_OUT_OF_RANGE";
    case ErrorCode::kBorderedSingular: return "BORDERED_SINGULAR";
    case ErrorCode::kAllInnerFailed: return "ALL_INNER_FAILED";
    case ErrorCode::kInitialCollision: return "INITIAL_COLLISION";
    case ErrorCode::kParse: return "PARSE_ERROR";
    case ErrorCode::kIo: return "IO_ERROR";
  }
  return "UNKNOWN";
}

/// Every error raised by the toolkit carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gnep
