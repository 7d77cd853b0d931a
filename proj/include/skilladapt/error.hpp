#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skilladapt {

enum class ErrorCode {
  InvalidArgument,
  EmptyData,
  SingularComponent,
  DegenerateTimeMarginal,
  SolveFailure,
  InvalidTime,
  NonUnitQuaternion,
  UnknownId,
  InvalidRange,
  RadiusOutOfBounds,
  NonPositiveDt,
  NoTriggeredAxis,
  UnknownTool,
  MissingParam,
  OutOfBounds,
  NotRunning,
  InvalidTransition,
  TooFewSamples,
  TooManyFixtures,
  Busy,
  Aborted,
  UnknownService,
  UnknownTopic,
  BadPayload,
  BindFailure,
  BackendUnreachable,
  MalformedBackendResponse,
  NotSupported,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a machine-readable code; the
// bridge and the CLI forward it verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace skilladapt
