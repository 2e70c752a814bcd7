#include "cfk/error.hpp"

namespace cfk {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DuplicateFaceId: return "DuplicateFaceId";
    case ErrorCode::UnknownFaceId: return "UnknownFaceId";
    case ErrorCode::TooFewFaces: return "TooFewFaces";
    case ErrorCode::DegenerateLandmarks: return "DegenerateLandmarks";
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::EmptyPatch: return "EmptyPatch";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::PartsOverlap: return "PartsOverlap";
    case ErrorCode::InfeasibleBalance: return "InfeasibleBalance";
    case ErrorCode::DuplicateActiveSession: return "DuplicateActiveSession";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::SessionComplete: return "SessionComplete";
    case ErrorCode::UnknownTrial: return "UnknownTrial";
    case ErrorCode::DuplicateSubmission: return "DuplicateSubmission";
    case ErrorCode::RtOutOfRange: return "RtOutOfRange";
    case ErrorCode::MissingInputs: return "MissingInputs";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace cfk
