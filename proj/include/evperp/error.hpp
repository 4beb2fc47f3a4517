#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evperp {

enum class ErrorCode {
  kMissingLeg,
  kUnsupportedTarget,
  kMalformedWeights,
  kGranularityTooCoarse,
  kMissingJointStructure,
  kInvalidParameter,
  kEmptySeries,
  kSameLeg,
  kWeightMismatch,
  kAllLegsResolved,
  kWindowTooShort,
  kMissingMicrostructureSeries,
  kUnexpectedLeg,
  kEmptyWindow,
  kIncompatibleCorrection,
  kMissingVolumeSeries,
  kZeroIndex,
  kRollOverlapsResolutionZone,
  kInvalidTransition,
  kSchemaMismatch,
  kBoundViolation,
  kDuplicateLeg,
  kOutcomeNotBinary,
  kUnknownConfigKey,
  kConfigValue,
  kIoFailure,
};

std::string_view to_string(ErrorCode code);

/// Error raised by every fallible operation. `field` names the offending
/// input (leg id, config key, file row) when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string field, const std::string& detail = {});

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace evperp
