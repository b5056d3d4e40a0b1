#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trackpose {

enum class ErrorCode {
  PitchSingularity,
  NonFiniteInput,
  DegenerateAcceleration,
  SingularInnovation,
  EmptyChannel,
  DegenerateChannel,
  SchemaMismatch,
  ModelNotTrained,
  ShapeMismatch,
  NonFiniteLoss,
  MissingColumn,
  NonMonotoneTime,
  RateMismatch,
  GroundTruthLeakage,
  InsufficientEpisodes,
  LengthMismatch,
  InvalidArgument,
  Io,
  Config,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. The code is stable; the message carries context
/// (file, row, frame index, channel name) for the operator.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace trackpose
