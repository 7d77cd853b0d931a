#include "skilladapt/error.hpp"

namespace skilladapt {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::SingularComponent: return "SingularComponent";
    case ErrorCode::DegenerateTimeMarginal: return "DegenerateTimeMarginal";
    case ErrorCode::SolveFailure: return "SolveFailure";
    case ErrorCode::InvalidTime: return "InvalidTime";
    case ErrorCode::NonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::RadiusOutOfBounds: return "RadiusOutOfBounds";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::NoTriggeredAxis: return "NoTriggeredAxis";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::MissingParam: return "MissingParam";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NotRunning: return "NotRunning";
    case ErrorCode::InvalidTransition: return "InvalidTransition";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::TooManyFixtures: return "TooManyFixtures";
    case ErrorCode::Busy: return "Busy";
    case ErrorCode::Aborted: return "Aborted";
    case ErrorCode::UnknownService: return "UnknownService";
    case ErrorCode::UnknownTopic: return "UnknownTopic";
    case ErrorCode::BadPayload: return "BadPayload";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::BackendUnreachable: return "BackendUnreachable";
    case ErrorCode::MalformedBackendResponse: return "MalformedBackendResponse";
    case ErrorCode::NotSupported: return "NotSupported";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace skilladapt
