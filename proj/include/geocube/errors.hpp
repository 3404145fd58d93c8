#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geocube {

enum class ErrorCode {
  kMalformedRecord,
  kOutOfBounds,
  kOutOfOrderPost,
  kEmptyTrajectory,
  kMissingChildren,
  kEmptyRegion,
  kDegenerateEdge,
  kInvalidArgument,
  kInvalidDictionary,
  kUnreadableInput,
  kUnsortedInput,
  kPortInUse,
  kSnapshotMissing,
  kNotFound,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace geocube
