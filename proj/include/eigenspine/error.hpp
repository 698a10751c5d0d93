#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eigenspine {

enum class ErrorCode {
  kEmptyInput,
  kDimensionMismatch,
  kRankDeficient,
  kInvalidM,
  kInvalidArgument,
  kDegenerateEdge,
  kTooFewInstances,
  kLengthMismatch,
  kEmptyImage,
  kEmptyReferenceSet,
  kInfeasibleSpec,
  kMissingStats,
  kNoPredictor,
  kBlockedOnReview,
  kIdMismatch,
  kValidation,
  kIo,
  kParse,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. Callers that need to branch on the
/// failure kind (the CLI maps codes to exit statuses) inspect code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace eigenspine
