#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace subtrack {

enum class ErrorCode {
  kMissingReference,
  kMissingTarget,
  kMissingObject,
  kMissingGroundTruth,
  kProviderUnreachable,
  kMalformedResponse,
  kUnknownRelation,
  kUnknownTask,
  kMalformedTaskFile,
  kMalformedTrace,
  kDimensionMismatch,
  kStaleFrame,
  kIllegalAction,
  kIllegalFailureForTask,
  kInvalidArgument,
  kConfig,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace subtrack
