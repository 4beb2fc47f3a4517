#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "evperp/types.hpp"
#include "evperp/validate.hpp"

namespace evperp {

enum class HaltStage { kPreResolution, kPostResolutionSettle, kDenominatorFloor };

std::string_view to_string(HaltStage stage);
HaltStage halt_stage_from_string(std::string_view text);

/// Half-open [start, end).
struct HaltWindow {
  TimeMs start{0};
  TimeMs end{0};
  LegId triggering_leg;
  HaltStage stage{HaltStage::kPreResolution};

  [[nodiscard]] bool contains(TimeMs t) const noexcept { return t >= start && t < end; }
  friend bool operator==(const HaltWindow&, const HaltWindow&) = default;
};

inline constexpr TimeMs kDefaultResolutionZoneMs = kDayMs;

struct HaltConfig {
  TimeMs resolution_zone_ms{kDefaultResolutionZoneMs};  // Delta_R
  TimeMs settle_lag_ms{0};  // optional post-resolution stage

  friend bool operator==(const HaltConfig&, const HaltConfig&) = default;
};

/// Sorts and unions overlapping or touching windows. A merged window keeps
/// the earliest window's leg and stage.
std::vector<HaltWindow> merge_windows(std::vector<HaltWindow> windows);

/// Resolution-zone windows per variant policy, already merged.
std::vector<HaltWindow> halt_windows(const VariantSpec& spec, const MarketData& data,
                                     const HaltConfig& config);

struct HaltDecision {
  bool accepted{true};
  std::optional<HaltWindow> window;
};

/// Only trader orders are ever rejected.
HaltDecision enforce_halt(std::span<const HaltWindow> windows, const ReplayEvent& event);

bool in_any_window(std::span<const HaltWindow> windows, TimeMs t);

// ---------------------------------------------------------------------------
// Rolls
// ---------------------------------------------------------------------------

struct RollPlan {
  std::size_t from_constituent{0};
  std::size_t to_constituent{1};
  TimeMs start{0};
  TimeMs end{0};       // lambda reaches 1 no later than this
  TimeMs deadline{0};  // from tau - Delta_R
  RollMechanism mechanism{};
  RollBasisRule basis_rule{RollBasisRule::kReAnchor};
  bool overlaps_zone{false};
  bool executed{false};
  double realized_basis{0.0};

  friend bool operator==(const RollPlan&, const RollPlan&) = default;
};

struct RollSchedule {
  std::vector<RollPlan> plans;
  /// RollOverlapsResolutionZone per late plan; warning grade.
  std::vector<ValidationIssue> warnings;
};

/// One plan per consecutive constituent pair. Volume-weighted rolls are
/// forced to complete at the deadline, so only cliff and linear rolls can
/// overlap the zone.
RollSchedule schedule_roll(std::span<const LegId> constituents, std::span<const TimeMs> taus,
                           TimeMs resolution_zone_ms, const RollMechanism& mechanism,
                           RollBasisRule basis_rule = RollBasisRule::kReAnchor);

/// Lambda at time t. `successor_volume` is cumulative successor volume since
/// the plan start; required for volume-weighted rolls.
double roll_weight(const RollPlan& plan, TimeMs t, std::optional<double> successor_volume = std::nullopt);

inline double rolled_index(double current, double successor, double lambda) {
  return (1.0 - lambda) * current + lambda * successor;
}

struct RollAdjustment {
  std::vector<double> cash;           // paid to each position
  std::vector<double> realized_basis; // basis booked per position
};

/// Applies the basis between the contract value before and after a lambda
/// step. re-anchor rescales entry and notional by I_after / I_before;
/// maintain-notional leaves positions alone and books the basis;
/// cash-settle pays the basis and shifts entry by the same move. re-anchor
/// throws ZeroIndex on a zero value only when there is a position to rescale.
RollAdjustment apply_roll_basis(std::span<Position> positions, double before, double after,
                                RollBasisRule rule);

std::string_view to_string(RollBasisRule rule);
RollBasisRule roll_basis_rule_from_string(std::string_view text);

}  // namespace evperp
