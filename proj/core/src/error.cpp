#include "trackpose/error.hpp"

namespace trackpose {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PitchSingularity: return "PitchSingularity";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DegenerateAcceleration: return "DegenerateAcceleration";
    case ErrorCode::SingularInnovation: return "SingularInnovation";
    case ErrorCode::EmptyChannel: return "EmptyChannel";
    case ErrorCode::DegenerateChannel: return "DegenerateChannel";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ModelNotTrained: return "ModelNotTrained";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::RateMismatch: return "RateMismatch";
    case ErrorCode::GroundTruthLeakage: return "GroundTruthLeakage";
    case ErrorCode::InsufficientEpisodes: return "InsufficientEpisodes";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace trackpose
