#include "spatialqa/error.hpp"

namespace spatialqa {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::TruncatedBody: return "TruncatedBody";
    case ErrorCode::EmptyAfterFiltering: return "EmptyAfterFiltering";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DanglingInstanceRef: return "DanglingInstanceRef";
    case ErrorCode::UnknownFrame: return "UnknownFrame";
    case ErrorCode::UnknownInstance: return "UnknownInstance";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::MultiTurn: return "MultiTurn";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NoNearbyObject: return "NoNearbyObject";
    case ErrorCode::SharedAnchor: return "SharedAnchor";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::NonPositiveTruth: return "NonPositiveTruth";
    case ErrorCode::NoNumberFound: return "NoNumberFound";
    case ErrorCode::NoMatch: return "NoMatch";
    case ErrorCode::AmbiguousMatch: return "AmbiguousMatch";
    case ErrorCode::DuplicateQid: return "DuplicateQid";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

}  // namespace spatialqa
