#include "evperp/risk.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "evperp/error.hpp"

namespace evperp {

namespace {

constexpr std::array<std::string_view, 3> kCorrectionNames{"per-leg-min", "variance-floor", "none"};

double adverse_distance(double value, Side side) {
  return side == Side::kLong ? value : 1.0 - value;
}

double boundary_correction(double p) { return std::max(std::min(p, 1.0 - p), kMinCorrection); }

}  // namespace

std::string_view to_string(FundingCorrection c) { return kCorrectionNames[static_cast<std::size_t>(c)]; }

FundingCorrection funding_correction_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kCorrectionNames.size(); ++i) {
    if (kCorrectionNames[i] == text) return static_cast<FundingCorrection>(i);
  }
  throw Error(ErrorCode::kConfigValue, "funding.correction", std::string{text});
}

FundingCorrection default_correction(VariantKind kind) {
  switch (kind) {
    case VariantKind::kVariance: return FundingCorrection::kVarianceFloor;
    case VariantKind::kLiquidity:
    case VariantKind::kFundingOnly: return FundingCorrection::kNone;
    default: return FundingCorrection::kPerLegMin;
  }
}

double jump_magnitude(const JumpInputs& in, Side side) {
  auto unresolved = [&](std::size_t i) { return i >= in.resolved.size() || !in.resolved[i]; };
  switch (in.kind) {
    case VariantKind::kConditional:
      return adverse_distance(std::clamp(in.index, 0.0, 1.0), side);
    case VariantKind::kSpread: {
      if (in.leg_values.size() != 2) throw Error(ErrorCode::kInvalidParameter, "jump.leg_values");
      // Long spread loses when A collapses to 0 or B to 1.
      const Side side_b = side == Side::kLong ? Side::kShort : Side::kLong;
      const double da = unresolved(0) ? adverse_distance(in.leg_values[0], side) : 0.0;
      const double db = unresolved(1) ? adverse_distance(in.leg_values[1], side_b) : 0.0;
      const double worst = std::max(da, db);
      if (unresolved(0) && unresolved(1) && in.simultaneous) return std::min(2.0, 2.0 * worst);
      return worst;
    }
    case VariantKind::kBasket:
    case VariantKind::kRolling: {
      if (in.weights.size() != in.leg_values.size()) throw Error(ErrorCode::kWeightMismatch, "jump.weights");
      double out = 0.0;
      for (std::size_t i = 0; i < in.leg_values.size(); ++i) {
        if (!unresolved(i)) continue;
        const double d = in.weights[i] * adverse_distance(in.leg_values[i], side);
        if (in.kind == VariantKind::kRolling || in.aggregation == JumpAggregation::kSum) {
          out += d;
        } else {
          out = std::max(out, d);
        }
      }
      return out;
    }
    default:
      return 0.0;
  }
}

double proximity_activation(std::optional<TimeMs> time_to_tau, TimeMs horizon_ms) {
  if (!time_to_tau) return 0.0;
  if (*time_to_tau <= horizon_ms) return 1.0;
  return static_cast<double>(horizon_ms) / static_cast<double>(*time_to_tau);
}

double maintenance_margin(double notional, double jump, const MarginSchedule& schedule,
                          std::optional<TimeMs> time_to_tau, bool force_full_activation) {
  const double phi =
      force_full_activation ? 1.0 : proximity_activation(time_to_tau, schedule.proximity_horizon_ms);
  const double fraction = schedule.base_rate + schedule.jump_coeff * jump * phi;
  return std::min(notional, notional * fraction);
}

double max_leverage(std::optional<TimeMs> time_to_tau, const LeverageSchedule& schedule,
                    TimeMs resolution_zone_ms) {
  if (!time_to_tau) return schedule.base;
  const TimeMs t = *time_to_tau;
  if (t < resolution_zone_ms) return schedule.floor;
  if (schedule.ramp_ms <= 0 || t >= resolution_zone_ms + schedule.ramp_ms) return schedule.base;
  const double frac = static_cast<double>(t - resolution_zone_ms) / static_cast<double>(schedule.ramp_ms);
  return schedule.floor + (schedule.base - schedule.floor) * frac;
}

double funding_rate(double mark, double index, const FundingParams& params, VariantKind kind,
                    const FundingLegs& legs) {
  const double basis = mark - index;
  double raw = 0.0;
  switch (params.correction.value_or(default_correction(kind))) {
    case FundingCorrection::kNone:
      raw = params.sensitivity * basis;
      break;
    case FundingCorrection::kVarianceFloor:
      if (kind != VariantKind::kVariance) {
        throw Error(ErrorCode::kIncompatibleCorrection, "funding.correction",
                    "variance-floor applies to the variance variant only");
      }
      if (!(params.epsilon > 0.0)) throw Error(ErrorCode::kInvalidParameter, "funding.epsilon");
      raw = params.sensitivity * basis / (std::max(index, 0.0) + params.epsilon);
      break;
    case FundingCorrection::kPerLegMin: {
      if (kind == VariantKind::kVariance || kind == VariantKind::kLiquidity ||
          kind == VariantKind::kFundingOnly) {
        throw Error(ErrorCode::kIncompatibleCorrection, "funding.correction",
                    "per-leg-min needs a probability-supported underlying");
      }
      if (kind == VariantKind::kSpread) {
        std::size_t open = 0;
        for (std::size_t i = 0; i < legs.values.size(); ++i) {
          open += (i >= legs.resolved.size() || !legs.resolved[i]) ? 1 : 0;
        }
        if (open == 0) {
          raw = params.sensitivity * basis;
          break;
        }
        // Basis split across unresolved legs, each scaled by its own boundary.
        const double share = basis / static_cast<double>(open);
        for (std::size_t i = 0; i < legs.values.size(); ++i) {
          if (i < legs.resolved.size() && legs.resolved[i]) continue;
          raw += params.sensitivity * share / boundary_correction(legs.values[i]);
        }
      } else {
        raw = params.sensitivity * basis / boundary_correction(index);
      }
      break;
    }
  }
  if (!std::isfinite(raw)) raw = basis >= 0.0 ? params.clip_hi : params.clip_lo;
  return std::clamp(raw, params.clip_lo, params.clip_hi);
}

double funding_only_rate(double target, double sensitivity, double clip_lo, double clip_hi) {
  return std::clamp(-sensitivity * target, clip_lo, clip_hi);
}

LiquidationCheck check_liquidation(const Position& position, double mark, double index,
                                   double maintenance, double slippage, double lo, double hi) {
  LiquidationCheck out;
  // Buffered funding is owed either way, so it counts toward health.
  out.equity = position.equity(mark) + position.funding_buffered;
  if (!(out.equity < maintenance)) return out;
  out.liquidate = true;
  out.fill_price = std::clamp(index - direction(position.side) * slippage, lo, hi);
  out.equity_at_fill = position.equity(out.fill_price) + position.funding_buffered;
  out.bad_debt = std::max(0.0, -out.equity_at_fill);
  return out;
}

std::vector<double> accrue_funding(std::span<Position> positions, double rate,
                                   SettlementCadence::Kind cadence) {
  std::vector<double> transfers(positions.size(), 0.0);
  if (rate == 0.0) return transfers;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    auto& p = positions[i];
    const double amount = -direction(p.side) * rate * p.notional;
    transfers[i] = amount;
    if (cadence == SettlementCadence::Kind::kContinuous) {
      p.funding_settled += amount;
    } else {
      p.funding_buffered += amount;
    }
  }
  return transfers;
}

double settle_buffered_funding(Position& position) {
  const double moved = position.funding_buffered;
  position.funding_settled += moved;
  position.funding_buffered = 0.0;
  return moved;
}

}  // namespace evperp
