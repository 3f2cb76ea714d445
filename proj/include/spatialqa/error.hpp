#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spatialqa {

enum class ErrorCode {
  InvalidArgument,
  DegenerateDirection,
  MalformedHeader,
  UnsupportedEncoding,
  TruncatedBody,
  EmptyAfterFiltering,
  SchemaViolation,
  DanglingInstanceRef,
  UnknownFrame,
  UnknownInstance,
  TooFewFrames,
  MultiTurn,
  TooShort,
  NoNearbyObject,
  SharedAnchor,
  NoPath,
  NonPositiveTruth,
  NoNumberFound,
  NoMatch,
  AmbiguousMatch,
  DuplicateQid,
  DimMismatch,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-checkable code; the
// message is prefixed with the code name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace spatialqa
