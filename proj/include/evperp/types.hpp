#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace evperp {

using TimeMs = std::int64_t;
using LegId = std::string;
using TraderId = std::string;

inline constexpr TimeMs kSecondMs = 1000;
inline constexpr TimeMs kHourMs = 3600 * kSecondMs;
inline constexpr TimeMs kDayMs = 24 * kHourMs;

struct ProbabilityPoint {
  TimeMs time{0};
  double value{0.0};

  friend bool operator==(const ProbabilityPoint&, const ProbabilityPoint&) = default;
};

struct ResolutionRecord {
  TimeMs tau{0};
  int outcome{0};  // R in {0, 1}

  friend bool operator==(const ResolutionRecord&, const ResolutionRecord&) = default;
};

/// One market's timestamped mid path. Optional microstructure columns, when
/// present, are index-aligned with `points`.
struct LegSeries {
  LegId leg_id;
  std::vector<ProbabilityPoint> points;
  std::optional<std::vector<double>> depth_200bps;
  std::optional<std::vector<double>> half_spread;
  std::optional<std::vector<double>> volume;  // traded notional in the tick
  std::optional<ResolutionRecord> resolution;

  friend bool operator==(const LegSeries&, const LegSeries&) = default;
};

struct NegRiskGroup {
  std::string group_id;
  std::vector<LegId> members;

  friend bool operator==(const NegRiskGroup&, const NegRiskGroup&) = default;
};

/// Everything a replay or constructor reads: legs keyed by id plus the
/// negRisk groups they belong to.
struct MarketData {
  std::map<LegId, LegSeries> legs;
  std::vector<NegRiskGroup> groups;

  [[nodiscard]] const LegSeries& leg(const LegId& id) const;
  [[nodiscard]] const NegRiskGroup* group_containing(const LegId& a, const LegId& b) const;
};

// ---------------------------------------------------------------------------
// Variant configuration
// ---------------------------------------------------------------------------

enum class FloorAction { kClipToLast, kHalt };

struct TerminationRule {
  enum class Kind { kLastTick, kFixed, kTwap };
  Kind kind{Kind::kTwap};
  double fixed_value{0.5};
  TimeMs twap_window_ms{kDayMs};

  friend bool operator==(const TerminationRule&, const TerminationRule&) = default;
};

enum class OrderingRule { kSettleAtA, kJointAtB };

/// P(A | B). Without `joint_leg`, A and B must share a negRisk group and the
/// contract conditions on "not B": index = p_A / (1 - p_B).
struct ConditionalSpec {
  LegId leg_a;
  LegId leg_b;
  std::optional<LegId> joint_leg;
  double denom_floor{0.01};
  FloorAction floor_action{FloorAction::kClipToLast};
  TerminationRule termination{};
  OrderingRule ordering{OrderingRule::kJointAtB};

  friend bool operator==(const ConditionalSpec&, const ConditionalSpec&) = default;
};

struct SpreadSpec {
  LegId leg_a;
  LegId leg_b;
  /// Treat both legs as one joint jump for margin when their resolution
  /// times are within this distance.
  TimeMs simultaneous_within_ms{kSecondMs};

  friend bool operator==(const SpreadSpec&, const SpreadSpec&) = default;
};

struct WeightRule {
  enum class Kind { kStatic, kEqual, kVolumeSnapshot };
  Kind kind{Kind::kEqual};
  std::vector<double> weights;  // kStatic only
  TimeMs snapshot_ms{0};        // kVolumeSnapshot only

  friend bool operator==(const WeightRule&, const WeightRule&) = default;
};

enum class RebalanceRule { kNone, kDropOnResolution };
enum class BasketHaltPolicy { kClosestLeg, kSingleMaturity };
enum class JumpAggregation { kMax, kSum };

struct BasketSpec {
  std::vector<LegId> legs;
  WeightRule weight_rule{};
  RebalanceRule rebalance{RebalanceRule::kNone};
  BasketHaltPolicy halt_policy{BasketHaltPolicy::kClosestLeg};

  friend bool operator==(const BasketSpec&, const BasketSpec&) = default;
};

enum class VarianceEstimator { kLevel, kIncrements };
enum class VarianceNormalization { kNone, kPerWindow };

struct VarianceSpec {
  LegId leg;
  VarianceEstimator estimator{VarianceEstimator::kLevel};
  TimeMs window_ms{kHourMs};
  TimeMs tick_ms{60 * kSecondMs};
  VarianceNormalization normalization{VarianceNormalization::kPerWindow};

  friend bool operator==(const VarianceSpec&, const VarianceSpec&) = default;
};

struct EntropySpec {
  LegId leg;

  friend bool operator==(const EntropySpec&, const EntropySpec&) = default;
};

enum class LiquidityMeasure { kMedianHalfSpread, kDepth, kAmihud };
enum class CrossMemberAggregation { kMean, kMedian };

struct LiquiditySpec {
  LiquidityMeasure measure{LiquidityMeasure::kMedianHalfSpread};
  std::vector<LegId> member_legs;
  CrossMemberAggregation depth_aggregation{CrossMemberAggregation::kMean};
  double amihud_floor{1e-6};

  friend bool operator==(const LiquiditySpec&, const LiquiditySpec&) = default;
};

/// Roll timing is expressed as leads before the outgoing constituent's tau so
/// one mechanism applies to every constituent pair.
struct RollMechanism {
  enum class Kind { kCliff, kLinear, kVolumeWeighted };
  Kind kind{Kind::kLinear};
  TimeMs cliff_lead_ms{2 * kDayMs};
  TimeMs start_lead_ms{4 * kDayMs};  // linear and volume-weighted start
  TimeMs end_lead_ms{2 * kDayMs};    // linear end
  double volume_target{0.0};         // required for volume-weighted

  friend bool operator==(const RollMechanism&, const RollMechanism&) = default;
};

enum class RollBasisRule { kReAnchor, kMaintainNotional, kCashSettle };
enum class RollDeadlinePolicy { kCompleteBeforeHalt };

struct RollingSpec {
  std::vector<LegId> constituents;  // ordered by tau
  RollMechanism mechanism{};
  RollBasisRule basis_rule{RollBasisRule::kReAnchor};
  RollDeadlinePolicy deadline_policy{RollDeadlinePolicy::kCompleteBeforeHalt};

  friend bool operator==(const RollingSpec&, const RollingSpec&) = default;
};

struct FundingTargetSpec {
  enum class Kind { kBasis, kDivergence, kDisagreement };
  Kind kind{Kind::kBasis};
  LegId leg_a;
  LegId leg_b;  // divergence only

  friend bool operator==(const FundingTargetSpec&, const FundingTargetSpec&) = default;
};

struct SettlementCadence {
  enum class Kind { kContinuous, kPeriodic, kOnClose };
  Kind kind{Kind::kContinuous};
  TimeMs interval_ms{8 * kHourMs};

  friend bool operator==(const SettlementCadence&, const SettlementCadence&) = default;
};

struct FundingOnlySpec {
  FundingTargetSpec target{};
  double clip_lo{-0.05};
  double clip_hi{0.05};
  SettlementCadence cadence{};

  friend bool operator==(const FundingOnlySpec&, const FundingOnlySpec&) = default;
};

using VariantSpec = std::variant<ConditionalSpec, SpreadSpec, BasketSpec, VarianceSpec,
                                 EntropySpec, LiquiditySpec, RollingSpec, FundingOnlySpec>;

enum class VariantKind {
  kConditional,
  kSpread,
  kBasket,
  kVariance,
  kEntropy,
  kLiquidity,
  kRolling,
  kFundingOnly,
};

VariantKind kind_of(const VariantSpec& spec);
std::string_view to_string(VariantKind kind);
VariantKind variant_kind_from_string(std::string_view name);

/// Legs a spec reads, in a stable order.
std::vector<LegId> referenced_legs(const VariantSpec& spec);

/// Variants whose underlying collapses at a random terminal outcome.
bool has_terminal_collapse(VariantKind kind);
/// Variants with a scheduled resolution that leverage compression keys on.
bool has_scheduled_resolution(VariantKind kind);

// ---------------------------------------------------------------------------
// Positions and live contract state
// ---------------------------------------------------------------------------

enum class Side { kLong, kShort };

inline double direction(Side side) { return side == Side::kLong ? 1.0 : -1.0; }
std::string_view to_string(Side side);
Side side_from_string(std::string_view text);

struct Position {
  TraderId trader_id;
  Side side{Side::kLong};
  double notional{0.0};
  double entry_price{0.0};
  double margin_posted{0.0};
  TimeMs open_time{0};
  double funding_settled{0.0};   // applied to equity
  double funding_buffered{0.0};  // owed, paid per cadence

  /// Unit-contract convention: each unit of notional pays (mark - entry).
  [[nodiscard]] double unrealized_pnl(double mark) const {
    return notional * direction(side) * (mark - entry_price);
  }
  [[nodiscard]] double equity(double mark) const {
    return margin_posted + funding_settled + unrealized_pnl(mark);
  }

  friend bool operator==(const Position&, const Position&) = default;
};

enum class Phase { kActive, kHalted, kResolved, kTerminatedEarly };

std::string_view to_string(Phase phase);

class ContractState {
 public:
  [[nodiscard]] Phase phase() const noexcept { return phase_; }
  [[nodiscard]] bool is_absorbed() const noexcept {
    return phase_ == Phase::kResolved || phase_ == Phase::kTerminatedEarly;
  }
  /// Follows active <-> halted, {active, halted} -> {resolved, terminated-early}.
  void transition(Phase next);

  /// Frozen outcomes are write-once; re-freezing with a different record throws.
  void freeze(const LegId& leg, const ResolutionRecord& record);
  [[nodiscard]] const std::map<LegId, ResolutionRecord>& frozen_legs() const noexcept {
    return frozen_;
  }
  [[nodiscard]] std::optional<ResolutionRecord> frozen(const LegId& leg) const;

  double underlying{0.0};
  double mark{0.0};
  std::vector<Position> positions;
  std::size_t active_constituent{0};

 private:
  Phase phase_{Phase::kActive};
  std::map<LegId, ResolutionRecord> frozen_;
};

// ---------------------------------------------------------------------------
// Replay event vocabulary
// ---------------------------------------------------------------------------

/// Microstructure values carried with a price tick.
struct MicroSnapshot {
  std::optional<double> half_spread;
  std::optional<double> depth_200bps;
  std::optional<double> volume;

  friend bool operator==(const MicroSnapshot&, const MicroSnapshot&) = default;
};

struct ResolutionEvent {
  LegId leg_id;
  ResolutionRecord record;
  friend bool operator==(const ResolutionEvent&, const ResolutionEvent&) = default;
};

struct PriceUpdate {
  LegId leg_id;
  ProbabilityPoint point;
  MicroSnapshot micro;
  friend bool operator==(const PriceUpdate&, const PriceUpdate&) = default;
};

struct RollCheckpoint {
  TimeMs time{0};
  friend bool operator==(const RollCheckpoint&, const RollCheckpoint&) = default;
};

struct FundingTick {
  TimeMs time{0};
  friend bool operator==(const FundingTick&, const FundingTick&) = default;
};

struct TraderOrder {
  TimeMs time{0};
  TraderId trader_id;
  Side side{Side::kLong};
  double notional{0.0};
  double leverage{1.0};
  friend bool operator==(const TraderOrder&, const TraderOrder&) = default;
};

/// Alternative order doubles as the same-timestamp kind order.
using ReplayEvent =
    std::variant<ResolutionEvent, PriceUpdate, RollCheckpoint, FundingTick, TraderOrder>;

TimeMs event_time(const ReplayEvent& event);

/// Strict total order: time, then kind, then leg/trader id, then payload.
bool event_less(const ReplayEvent& lhs, const ReplayEvent& rhs);

void sort_events(std::vector<ReplayEvent>& events);

}  // namespace evperp
