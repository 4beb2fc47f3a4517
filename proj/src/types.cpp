#include "evperp/types.hpp"

#include <algorithm>
#include <tuple>

#include "evperp/error.hpp"

namespace evperp {

const LegSeries& MarketData::leg(const LegId& id) const {
  auto it = legs.find(id);
  if (it == legs.end()) throw Error(ErrorCode::kMissingLeg, id);
  return it->second;
}

const NegRiskGroup* MarketData::group_containing(const LegId& a, const LegId& b) const {
  for (const auto& group : groups) {
    const auto has = [&](const LegId& id) {
      return std::find(group.members.begin(), group.members.end(), id) != group.members.end();
    };
    if (has(a) && has(b)) return &group;
  }
  return nullptr;
}

VariantKind kind_of(const VariantSpec& spec) { return static_cast<VariantKind>(spec.index()); }

std::string_view to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::kConditional: return "conditional";
    case VariantKind::kSpread: return "spread";
    case VariantKind::kBasket: return "basket";
    case VariantKind::kVariance: return "variance";
    case VariantKind::kEntropy: return "entropy";
    case VariantKind::kLiquidity: return "liquidity";
    case VariantKind::kRolling: return "rolling";
    case VariantKind::kFundingOnly: return "funding-only";
  }
  return "unknown";
}

VariantKind variant_kind_from_string(std::string_view name) {
  for (int i = 0; i < static_cast<int>(std::variant_size_v<VariantSpec>); ++i) {
    auto kind = static_cast<VariantKind>(i);
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::kConfigValue, "variant", std::string{"unknown variant '"} + std::string{name} + "'");
}

std::vector<LegId> referenced_legs(const VariantSpec& spec) {
  struct Visitor {
    std::vector<LegId> operator()(const ConditionalSpec& s) const {
      std::vector<LegId> out{s.leg_a, s.leg_b};
      if (s.joint_leg) out.push_back(*s.joint_leg);
      return out;
    }
    std::vector<LegId> operator()(const SpreadSpec& s) const { return {s.leg_a, s.leg_b}; }
    std::vector<LegId> operator()(const BasketSpec& s) const { return s.legs; }
    std::vector<LegId> operator()(const VarianceSpec& s) const { return {s.leg}; }
    std::vector<LegId> operator()(const EntropySpec& s) const { return {s.leg}; }
    std::vector<LegId> operator()(const LiquiditySpec& s) const { return s.member_legs; }
    std::vector<LegId> operator()(const RollingSpec& s) const { return s.constituents; }
    std::vector<LegId> operator()(const FundingOnlySpec& s) const {
      if (s.target.kind == FundingTargetSpec::Kind::kDivergence) return {s.target.leg_a, s.target.leg_b};
      if (s.target.kind == FundingTargetSpec::Kind::kBasis) return {s.target.leg_a};
      return {};
    }
  };
  return std::visit(Visitor{}, spec);
}

bool has_terminal_collapse(VariantKind kind) {
  return kind == VariantKind::kConditional || kind == VariantKind::kSpread ||
         kind == VariantKind::kBasket || kind == VariantKind::kRolling;
}

bool has_scheduled_resolution(VariantKind kind) { return has_terminal_collapse(kind); }

std::string_view to_string(Side side) { return side == Side::kLong ? "long" : "short"; }

Side side_from_string(std::string_view text) {
  if (text == "long" || text == "buy") return Side::kLong;
  if (text == "short" || text == "sell") return Side::kShort;
  throw Error(ErrorCode::kConfigValue, "side", std::string{"unknown side '"} + std::string{text} + "'");
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kActive: return "active";
    case Phase::kHalted: return "halted";
    case Phase::kResolved: return "resolved";
    case Phase::kTerminatedEarly: return "terminated-early";
  }
  return "unknown";
}

void ContractState::transition(Phase next) {
  const bool ok = [&] {
    switch (phase_) {
      case Phase::kActive:
        return next == Phase::kHalted || next == Phase::kResolved || next == Phase::kTerminatedEarly ||
               next == Phase::kActive;
      case Phase::kHalted:
        return next == Phase::kActive || next == Phase::kResolved || next == Phase::kTerminatedEarly ||
               next == Phase::kHalted;
      case Phase::kResolved:
      case Phase::kTerminatedEarly:
        return false;
    }
    return false;
  }();
  if (!ok) {
    throw Error(ErrorCode::kInvalidTransition, std::string{to_string(phase_)},
                "cannot move to " + std::string{to_string(next)});
  }
  phase_ = next;
}

void ContractState::freeze(const LegId& leg, const ResolutionRecord& record) {
  auto [it, inserted] = frozen_.emplace(leg, record);
  if (!inserted && !(it->second == record)) {
    throw Error(ErrorCode::kInvalidTransition, leg, "frozen outcome is immutable");
  }
}

std::optional<ResolutionRecord> ContractState::frozen(const LegId& leg) const {
  auto it = frozen_.find(leg);
  if (it == frozen_.end()) return std::nullopt;
  return it->second;
}

TimeMs event_time(const ReplayEvent& event) {
  struct Visitor {
    TimeMs operator()(const ResolutionEvent& e) const { return e.record.tau; }
    TimeMs operator()(const PriceUpdate& e) const { return e.point.time; }
    TimeMs operator()(const RollCheckpoint& e) const { return e.time; }
    TimeMs operator()(const FundingTick& e) const { return e.time; }
    TimeMs operator()(const TraderOrder& e) const { return e.time; }
  };
  return std::visit(Visitor{}, event);
}

namespace {

// nullopt sorts before any value, matching std::optional's ordering.
auto micro_key(const MicroSnapshot& m) { return std::tie(m.half_spread, m.depth_200bps, m.volume); }

}  // namespace

bool event_less(const ReplayEvent& lhs, const ReplayEvent& rhs) {
  const TimeMs lt = event_time(lhs);
  const TimeMs rt = event_time(rhs);
  if (lt != rt) return lt < rt;
  if (lhs.index() != rhs.index()) return lhs.index() < rhs.index();

  switch (lhs.index()) {
    case 0: {
      const auto& a = std::get<ResolutionEvent>(lhs);
      const auto& b = std::get<ResolutionEvent>(rhs);
      return std::tie(a.leg_id, a.record.outcome) < std::tie(b.leg_id, b.record.outcome);
    }
    case 1: {
      const auto& a = std::get<PriceUpdate>(lhs);
      const auto& b = std::get<PriceUpdate>(rhs);
      if (a.leg_id != b.leg_id) return a.leg_id < b.leg_id;
      if (a.point.value != b.point.value) return a.point.value < b.point.value;
      return micro_key(a.micro) < micro_key(b.micro);
    }
    case 2:
    case 3:
      return false;
    case 4: {
      const auto& a = std::get<TraderOrder>(lhs);
      const auto& b = std::get<TraderOrder>(rhs);
      return std::tie(a.trader_id, a.side, a.notional, a.leverage) <
             std::tie(b.trader_id, b.side, b.notional, b.leverage);
    }
    default:
      return false;
  }
}

void sort_events(std::vector<ReplayEvent>& events) {
  std::stable_sort(events.begin(), events.end(), event_less);
}

}  // namespace evperp
