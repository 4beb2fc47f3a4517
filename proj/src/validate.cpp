#include "evperp/validate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "evperp/align.hpp"

namespace evperp {

bool ValidationResult::has(ErrorCode code) const {
  return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.code == code; });
}

void ValidationResult::throw_if_failed() const {
  if (!issues.empty()) throw Error(issues.front().code, issues.front().field, issues.front().detail);
}

ValidationResult validate_leg(const LegSeries& leg) {
  ValidationResult out;
  auto fail = [&](ErrorCode code, const std::string& detail) {
    out.issues.push_back({code, leg.leg_id, detail});
  };
  if (leg.points.empty()) fail(ErrorCode::kEmptySeries, "no points");
  for (std::size_t i = 0; i < leg.points.size(); ++i) {
    const auto& p = leg.points[i];
    if (!(p.value >= 0.0 && p.value <= 1.0)) {
      fail(ErrorCode::kBoundViolation, "value outside [0,1] at point " + std::to_string(i));
    }
    if (i > 0 && p.time <= leg.points[i - 1].time) {
      fail(ErrorCode::kSchemaMismatch, "times not strictly increasing at point " + std::to_string(i));
    }
  }
  auto check_column = [&](const std::optional<std::vector<double>>& col, const char* name) {
    if (!col) return;
    if (col->size() != leg.points.size()) {
      fail(ErrorCode::kSchemaMismatch, std::string{name} + " not aligned with points");
      return;
    }
    for (double v : *col) {
      if (!(v >= 0.0)) {
        fail(ErrorCode::kBoundViolation, std::string{name} + " has a negative value");
        return;
      }
    }
  };
  check_column(leg.depth_200bps, "depth_200bps");
  check_column(leg.half_spread, "half_spread");
  check_column(leg.volume, "volume");
  if (leg.resolution) {
    const auto& r = *leg.resolution;
    if (r.outcome != 0 && r.outcome != 1) fail(ErrorCode::kOutcomeNotBinary, "outcome must be 0 or 1");
    if (!leg.points.empty() && r.tau < leg.points.back().time) {
      const auto& last = leg.points.back();
      if (!(last.time == r.tau && last.value == r.outcome)) {
        fail(ErrorCode::kSchemaMismatch, "points after tau");
      }
    }
  }
  return out;
}

namespace {

class SpecChecker {
 public:
  SpecChecker(const MarketData& data, ValidationResult& out) : data_(data), out_(out) {}

  void fail(ErrorCode code, std::string field, std::string detail = {}) {
    out_.issues.push_back({code, std::move(field), std::move(detail)});
  }

  bool require_leg(const LegId& id, const std::string& field) {
    if (!data_.legs.contains(id)) {
      fail(ErrorCode::kMissingLeg, field, "leg '" + id + "' not in data");
      return false;
    }
    return true;
  }

  void operator()(const ConditionalSpec& s) {
    const bool a = require_leg(s.leg_a, "conditional.leg_a");
    const bool b = require_leg(s.leg_b, "conditional.leg_b");
    if (s.leg_a == s.leg_b) fail(ErrorCode::kSameLeg, "conditional.leg_b");
    if (!(s.denom_floor > 0.0 && s.denom_floor < 1.0)) {
      fail(ErrorCode::kInvalidParameter, "conditional.denom_floor", "must lie in (0,1)");
    }
    if (s.termination.kind == TerminationRule::Kind::kFixed &&
        !(s.termination.fixed_value >= 0.0 && s.termination.fixed_value <= 1.0)) {
      fail(ErrorCode::kInvalidParameter, "conditional.termination.fixed_value", "must lie in [0,1]");
    }
    if (s.termination.kind == TerminationRule::Kind::kTwap && s.termination.twap_window_ms <= 0) {
      fail(ErrorCode::kInvalidParameter, "conditional.termination.twap_window_ms", "must be positive");
    }
    if (s.joint_leg) {
      require_leg(*s.joint_leg, "conditional.joint_leg");
    } else if (a && b && data_.group_containing(s.leg_a, s.leg_b) == nullptr) {
      fail(ErrorCode::kMissingJointStructure, "conditional.joint_leg",
           "needs a joint market or a shared negRisk group");
    }
  }

  void operator()(const SpreadSpec& s) {
    require_leg(s.leg_a, "spread.leg_a");
    require_leg(s.leg_b, "spread.leg_b");
    if (s.leg_a == s.leg_b) fail(ErrorCode::kSameLeg, "spread.leg_b");
  }

  void operator()(const BasketSpec& s) {
    if (s.legs.empty()) fail(ErrorCode::kMalformedWeights, "basket.legs", "empty basket");
    for (std::size_t i = 0; i < s.legs.size(); ++i) require_leg(s.legs[i], "basket.legs[" + std::to_string(i) + "]");
    if (std::set<LegId>(s.legs.begin(), s.legs.end()).size() != s.legs.size()) {
      fail(ErrorCode::kDuplicateLeg, "basket.legs");
    }
    if (s.weight_rule.kind == WeightRule::Kind::kStatic) {
      const auto& w = s.weight_rule.weights;
      if (w.size() != s.legs.size()) {
        fail(ErrorCode::kMalformedWeights, "basket.weights", "weight count differs from leg count");
        return;
      }
      double sum = 0.0;
      for (double x : w) {
        if (!(x >= 0.0)) fail(ErrorCode::kMalformedWeights, "basket.weights", "negative weight");
        sum += x;
      }
      if (std::abs(sum - 1.0) > kWeightSumTolerance) {
        fail(ErrorCode::kMalformedWeights, "basket.weights", "weights sum to " + std::to_string(sum));
      }
    }
    if (s.weight_rule.kind == WeightRule::Kind::kVolumeSnapshot) {
      for (const auto& id : s.legs) {
        if (data_.legs.contains(id) && !data_.legs.at(id).volume) {
          fail(ErrorCode::kMissingMicrostructureSeries, id, "volume-snapshot weights need volume");
        }
      }
    }
  }

  void operator()(const VarianceSpec& s) {
    const bool present = require_leg(s.leg, "variance.leg");
    if (s.tick_ms <= 0 || s.window_ms <= 0 || s.tick_ms >= s.window_ms) {
      fail(ErrorCode::kInvalidParameter, "variance.tick_ms", "need 0 < tick < window");
      return;
    }
    if (s.window_ms % s.tick_ms != 0) {
      fail(ErrorCode::kInvalidParameter, "variance.window_ms", "window must be a multiple of tick");
    }
    if (!present) return;
    const auto& pts = data_.legs.at(s.leg).points;
    if (pts.size() >= 2) {
      std::vector<TimeMs> gaps;
      gaps.reserve(pts.size() - 1);
      for (std::size_t i = 1; i < pts.size(); ++i) gaps.push_back(pts[i].time - pts[i - 1].time);
      auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
      std::nth_element(gaps.begin(), mid, gaps.end());
      if (*mid > s.tick_ms) {
        fail(ErrorCode::kGranularityTooCoarse, "variance.tick_ms",
             "median observation spacing " + std::to_string(*mid) + "ms exceeds tick");
      }
    }
  }

  void operator()(const EntropySpec& s) { require_leg(s.leg, "entropy.leg"); }

  void operator()(const LiquiditySpec& s) {
    if (s.member_legs.empty()) fail(ErrorCode::kMissingLeg, "liquidity.member_legs", "no members");
    if (!(s.amihud_floor > 0.0)) fail(ErrorCode::kInvalidParameter, "liquidity.amihud_floor");
    for (const auto& id : s.member_legs) {
      if (!require_leg(id, "liquidity.member_legs")) continue;
      const auto& leg = data_.legs.at(id);
      const bool ok = s.measure == LiquidityMeasure::kMedianHalfSpread ? leg.half_spread.has_value()
                      : s.measure == LiquidityMeasure::kDepth        ? leg.depth_200bps.has_value()
                                                                     : leg.volume.has_value();
      if (!ok) fail(ErrorCode::kMissingMicrostructureSeries, id, "series required by the liquidity measure");
    }
  }

  void operator()(const RollingSpec& s) {
    if (s.constituents.empty()) fail(ErrorCode::kMissingLeg, "rolling.constituents", "no constituents");
    std::optional<TimeMs> prev_tau;
    for (const auto& id : s.constituents) {
      if (!require_leg(id, "rolling.constituents")) continue;
      const auto& leg = data_.legs.at(id);
      if (leg.resolution) {
        if (prev_tau && leg.resolution->tau < *prev_tau) {
          fail(ErrorCode::kInvalidParameter, "rolling.constituents", "constituents not ordered by tau");
        }
        prev_tau = leg.resolution->tau;
      }
      if (s.mechanism.kind == RollMechanism::Kind::kVolumeWeighted && !leg.volume) {
        fail(ErrorCode::kMissingVolumeSeries, id);
      }
    }
    const auto& m = s.mechanism;
    if (m.kind == RollMechanism::Kind::kVolumeWeighted && !(m.volume_target > 0.0)) {
      fail(ErrorCode::kInvalidParameter, "rolling.volume_target", "required and positive");
    }
    if (m.kind == RollMechanism::Kind::kLinear && m.start_lead_ms <= m.end_lead_ms) {
      fail(ErrorCode::kInvalidParameter, "rolling.start_lead_ms", "linear window must start before it ends");
    }
  }

  void operator()(const FundingOnlySpec& s) {
    using K = FundingTargetSpec::Kind;
    if (s.target.kind == K::kDisagreement) {
      fail(ErrorCode::kUnsupportedTarget, "funding.target",
           "disagreement needs per-trader probability data");
    } else {
      require_leg(s.target.leg_a, "funding.leg_a");
      if (s.target.kind == K::kDivergence) {
        require_leg(s.target.leg_b, "funding.leg_b");
        if (s.target.leg_a == s.target.leg_b) fail(ErrorCode::kSameLeg, "funding.leg_b");
      }
    }
    if (!(s.clip_lo <= 0.0 && 0.0 <= s.clip_hi)) {
      fail(ErrorCode::kInvalidParameter, "funding.clip", "need lo <= 0 <= hi");
    }
    if (s.cadence.kind == SettlementCadence::Kind::kPeriodic && s.cadence.interval_ms <= 0) {
      fail(ErrorCode::kInvalidParameter, "funding.cadence_interval_ms");
    }
  }

 private:
  const MarketData& data_;
  ValidationResult& out_;
};

}  // namespace

ValidatedSpec validate_spec(const VariantSpec& spec, const MarketData& data) {
  ValidatedSpec out;
  SpecChecker checker{data, out.result};
  std::visit(checker, spec);
  for (const auto& id : referenced_legs(spec)) {
    auto it = data.legs.find(id);
    if (it == data.legs.end()) continue;
    auto leg_result = validate_leg(it->second);
    for (auto& issue : leg_result.issues) out.result.issues.push_back(std::move(issue));
  }
  if (out.result.ok()) out.spec = spec;
  return out;
}

ValidationResult validate_negrisk_group(const NegRiskGroup& group, const MarketData& data,
                                        double tolerance, TimeMs grid_ms) {
  ValidationResult out;
  if (group.members.size() < 2) {
    out.issues.push_back({ErrorCode::kInvalidParameter, group.group_id, "negRisk group needs k >= 2"});
    return out;
  }
  for (const auto& id : group.members) {
    if (!data.legs.contains(id)) out.issues.push_back({ErrorCode::kMissingLeg, group.group_id, id});
  }
  if (!out.ok()) return out;
  const auto grid = align_series(data, group.members, AlignOptions{grid_ms, std::nullopt, std::nullopt});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double sum = 0.0;
    for (const auto& row : grid.values) sum += row[k];
    if (std::abs(sum - 1.0) > tolerance) {
      out.issues.push_back({ErrorCode::kBoundViolation, group.group_id,
                            "members sum to " + std::to_string(sum) + " at t=" +
                                std::to_string(grid.times[k])});
      break;
    }
  }
  return out;
}

}  // namespace evperp
