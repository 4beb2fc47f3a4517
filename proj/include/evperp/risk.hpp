#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "evperp/types.hpp"

namespace evperp {

struct MarginSchedule {
  double base_rate{0.05};   // m0
  double jump_coeff{0.0};   // m_J
  TimeMs proximity_horizon_ms{kDayMs};
  JumpAggregation aggregation{JumpAggregation::kSum};

  friend bool operator==(const MarginSchedule&, const MarginSchedule&) = default;
};

enum class FundingCorrection { kPerLegMin, kVarianceFloor, kNone };

std::string_view to_string(FundingCorrection c);
FundingCorrection funding_correction_from_string(std::string_view text);

/// Smallest per-leg correction denominator; keeps the rate finite when an
/// unresolved leg prints exactly at a boundary.
inline constexpr double kMinCorrection = 1e-6;

struct FundingParams {
  double sensitivity{1.0};  // kappa
  std::optional<FundingCorrection> correction;  // unset: the variant default
  double epsilon{1e-4};     // variance-floor only
  double clip_lo{-0.05};
  double clip_hi{0.05};
  TimeMs interval_ms{8 * kHourMs};

  friend bool operator==(const FundingParams&, const FundingParams&) = default;
};

/// Correction a variant uses when the config leaves it unset.
FundingCorrection default_correction(VariantKind kind);

struct LeverageSchedule {
  double base{10.0};
  double floor{2.0};
  TimeMs ramp_ms{7 * kDayMs};

  friend bool operator==(const LeverageSchedule&, const LeverageSchedule&) = default;
};

struct RiskConfig {
  MarginSchedule margin{};
  FundingParams funding{};
  LeverageSchedule leverage{};
  double liquidation_slippage{0.0};

  friend bool operator==(const RiskConfig&, const RiskConfig&) = default;
};

/// Worst-case terminal move per unit notional. Leg values are what each leg
/// reads right now; resolved legs cannot jump again.
struct JumpInputs {
  VariantKind kind{VariantKind::kConditional};
  double index{0.0};                // conditional
  std::vector<double> leg_values;   // spread (a, b), basket members, rolling (c_i, c_i+1)
  std::vector<double> weights;      // basket weights, rolling (1 - lambda, lambda)
  std::vector<bool> resolved;
  bool simultaneous{false};         // spread: both legs resolve together
  JumpAggregation aggregation{JumpAggregation::kSum};
};

double jump_magnitude(const JumpInputs& in, Side side);

/// Activation of the jump term: 1 inside the horizon, horizon / ttt outside,
/// 0 with no scheduled resolution.
double proximity_activation(std::optional<TimeMs> time_to_tau, TimeMs horizon_ms);

/// notional * (m0 + m_J * jump * phi), capped at notional.
double maintenance_margin(double notional, double jump, const MarginSchedule& schedule,
                          std::optional<TimeMs> time_to_tau, bool force_full_activation = false);

/// L_base beyond zone + ramp, linear across the ramp, L_floor inside the zone.
double max_leverage(std::optional<TimeMs> time_to_tau, const LeverageSchedule& schedule,
                    TimeMs resolution_zone_ms);

/// Per-leg correction inputs. Spread passes both legs; single-underlying
/// variants pass the index as one leg.
struct FundingLegs {
  std::vector<double> values;
  std::vector<bool> resolved;
};

/// Clipped kappa * basis / C for the configured correction.
double funding_rate(double mark, double index, const FundingParams& params, VariantKind kind,
                    const FundingLegs& legs = {});

/// Funding-only contracts: longs receive kappa * target, so the rate paid by
/// longs is the clipped negation.
double funding_only_rate(double target, double sensitivity, double clip_lo, double clip_hi);

struct LiquidationCheck {
  bool liquidate{false};
  double equity{0.0};       // at mark
  double fill_price{0.0};
  double equity_at_fill{0.0};
  double bad_debt{0.0};
};

/// Liquidates when equity at mark falls below maintenance. The fill is at
/// index moved against the position by `slippage`, clamped to [lo, hi].
LiquidationCheck check_liquidation(const Position& position, double mark, double index,
                                   double maintenance, double slippage = 0.0,
                                   double lo = -1e300, double hi = 1e300);

/// Funding owed per position for one tick: longs pay rate * notional.
/// Continuous cadence settles into equity; the others buffer.
std::vector<double> accrue_funding(std::span<Position> positions, double rate,
                                   SettlementCadence::Kind cadence);

/// Moves buffered funding into settled funding; returns the amount moved.
double settle_buffered_funding(Position& position);

}  // namespace evperp
