#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace palletbench {

enum class ErrorCode {
  kMalformedJson,
  kMissingField,
  kInvalidId,
  kInvalidValue,
  kUnsupportedFormat,
  kUnknownReference,
  kScoreRange,
  kRleLengthMismatch,
  kDimensionMismatch,
  kNonConvex,
  kCategoryConflict,
  kDarkenRange,
  kIo,
  kUnsupportedImage,
  kInvalidConfig,
  kRetryExhausted,
  kUnknownPlaceholder,
  kNoValidRuns,
  kGroupEmpty,
  kExternalCommand,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedJson: return "MALFORMED_JSON";
    case ErrorCode::kMissingField: return "MISSING_FIELD";
    case ErrorCode::kInvalidId: return "INVALID_ID";
    case ErrorCode::kInvalidValue: return "INVALID_VALUE";
    case ErrorCode::kUnsupportedFormat: return "UNSUPPORTED_FORMAT";
    case ErrorCode::kUnknownReference: return "UNKNOWN_REFERENCE";
    case ErrorCode::kScoreRange: return "SCORE_RANGE";
    case ErrorCode::kRleLengthMismatch: return "RLE_LENGTH_MISMATCH";
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kNonConvex: return "NON_CONVEX";
    case ErrorCode::kCategoryConflict: return "CATEGORY_CONFLICT";
    case ErrorCode::kDarkenRange: return "DARKEN_RANGE";
    case ErrorCode::kIo: return "IO";
    case ErrorCode::kUnsupportedImage: return "UNSUPPORTED_IMAGE";
    case ErrorCode::kInvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::kRetryExhausted: return "RETRY_EXHAUSTED";
    case ErrorCode::kUnknownPlaceholder: return "UNKNOWN_PLACEHOLDER";
    case ErrorCode::kNoValidRuns: return "NO_VALID_RUNS";
    case ErrorCode::kGroupEmpty: return "GROUP_EMPTY";
    case ErrorCode::kExternalCommand: return "EXTERNAL_COMMAND";
  }
  return "UNKNOWN";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace palletbench
