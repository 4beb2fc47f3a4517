#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evperp/error.hpp"
#include "evperp/types.hpp"

namespace evperp {

struct ValidationIssue {
  ErrorCode code;
  std::string field;
  std::string detail;
};

struct ValidationResult {
  std::vector<ValidationIssue> issues;

  [[nodiscard]] bool ok() const noexcept { return issues.empty(); }
  [[nodiscard]] bool has(ErrorCode code) const;
  /// Throws the first issue as an Error.
  void throw_if_failed() const;
};

/// The spec itself when valid, otherwise every problem found.
struct ValidatedSpec {
  std::optional<VariantSpec> spec;
  ValidationResult result;
};

inline constexpr double kWeightSumTolerance = 1e-9;
inline constexpr double kDefaultNegRiskTolerance = 0.02;

/// Per-series invariants: strictly increasing times, values in [0, 1],
/// optional columns aligned and non-negative, resolution consistent.
ValidationResult validate_leg(const LegSeries& leg);

ValidatedSpec validate_spec(const VariantSpec& spec, const MarketData& data);

/// Sum-to-one check on every grid point where all members are observed.
ValidationResult validate_negrisk_group(const NegRiskGroup& group, const MarketData& data,
                                        double tolerance = kDefaultNegRiskTolerance,
                                        TimeMs grid_ms = kSecondMs);

}  // namespace evperp
