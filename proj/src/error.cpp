#include "evperp/error.hpp"

namespace evperp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingLeg: return "MissingLeg";
    case ErrorCode::kUnsupportedTarget: return "UnsupportedTarget";
    case ErrorCode::kMalformedWeights: return "MalformedWeights";
    case ErrorCode::kGranularityTooCoarse: return "GranularityTooCoarse";
    case ErrorCode::kMissingJointStructure: return "MissingJointStructure";
    case ErrorCode::kInvalidParameter: return "InvalidParameter";
    case ErrorCode::kEmptySeries: return "EmptySeries";
    case ErrorCode::kSameLeg: return "SameLeg";
    case ErrorCode::kWeightMismatch: return "WeightMismatch";
    case ErrorCode::kAllLegsResolved: return "AllLegsResolved";
    case ErrorCode::kWindowTooShort: return "WindowTooShort";
    case ErrorCode::kMissingMicrostructureSeries: return "MissingMicrostructureSeries";
    case ErrorCode::kUnexpectedLeg: return "UnexpectedLeg";
    case ErrorCode::kEmptyWindow: return "EmptyWindow";
    case ErrorCode::kIncompatibleCorrection: return "IncompatibleCorrection";
    case ErrorCode::kMissingVolumeSeries: return "MissingVolumeSeries";
    case ErrorCode::kZeroIndex: return "ZeroIndex";
    case ErrorCode::kRollOverlapsResolutionZone: return "RollOverlapsResolutionZone";
    case ErrorCode::kInvalidTransition: return "InvalidTransition";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kBoundViolation: return "BoundViolation";
    case ErrorCode::kDuplicateLeg: return "DuplicateLeg";
    case ErrorCode::kOutcomeNotBinary: return "OutcomeNotBinary";
    case ErrorCode::kUnknownConfigKey: return "UnknownConfigKey";
    case ErrorCode::kConfigValue: return "ConfigValue";
    case ErrorCode::kIoFailure: return "IoFailure";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& field, const std::string& detail) {
  std::string msg{to_string(code)};
  if (!field.empty()) msg += " [" + field + "]";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(ErrorCode code, std::string field, const std::string& detail)
    : std::runtime_error(compose(code, field, detail)), code_(code), field_(std::move(field)) {}

}  // namespace evperp
