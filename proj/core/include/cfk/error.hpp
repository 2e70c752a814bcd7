#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfk {

enum class ErrorCode {
  InvalidArgument,
  Io,
  MissingFile,
  SchemaViolation,
  DuplicateFaceId,
  UnknownFaceId,
  TooFewFaces,
  DegenerateLandmarks,
  EmptyImage,
  EmptyPatch,
  DegenerateInput,
  ImageTooSmall,
  DimMismatch,
  ZeroVariance,
  SingleClass,
  SingularCovariance,
  NonFinite,
  PartsOverlap,
  InfeasibleBalance,
  DuplicateActiveSession,
  UnknownSession,
  SessionComplete,
  UnknownTrial,
  DuplicateSubmission,
  RtOutOfRange,
  MissingInputs,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library carries one of the codes above so
/// callers (the CLI, the HTTP layer) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cfk
