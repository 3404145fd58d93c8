#include "geocube/errors.hpp"

namespace geocube {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kOutOfOrderPost: return "OutOfOrderPost";
    case ErrorCode::kEmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::kMissingChildren: return "MissingChildren";
    case ErrorCode::kEmptyRegion: return "EmptyRegion";
    case ErrorCode::kDegenerateEdge: return "DegenerateEdge";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidDictionary: return "InvalidDictionary";
    case ErrorCode::kUnreadableInput: return "UnreadableInput";
    case ErrorCode::kUnsortedInput: return "UnsortedInput";
    case ErrorCode::kPortInUse: return "PortInUse";
    case ErrorCode::kSnapshotMissing: return "SnapshotMissing";
    case ErrorCode::kNotFound: return "NotFound";
  }
  return "Unknown";
}

}  // namespace geocube
