#include "evperp/halt_roll.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "evperp/error.hpp"

namespace evperp {

namespace {

constexpr std::array<std::string_view, 3> kStageNames{"pre-resolution", "post-resolution-settle",
                                                      "denominator-floor"};

std::optional<ResolutionRecord> resolution_of(const MarketData& data, const LegId& id) {
  auto it = data.legs.find(id);
  if (it == data.legs.end()) return std::nullopt;
  return it->second.resolution;
}

class WindowBuilder {
 public:
  WindowBuilder(const MarketData& data, const HaltConfig& config) : data_(data), config_(config) {}

  void add(const LegId& leg) {
    const auto r = resolution_of(data_, leg);
    if (r) add(leg, r->tau);
  }

  void add(const LegId& leg, TimeMs tau) {
    out_.push_back({tau - config_.resolution_zone_ms, tau, leg, HaltStage::kPreResolution});
    if (config_.settle_lag_ms > 0) {
      out_.push_back({tau, tau + config_.settle_lag_ms, leg, HaltStage::kPostResolutionSettle});
    }
  }

  void operator()(const ConditionalSpec& s) {
    const auto a = resolution_of(data_, s.leg_a);
    const auto b = resolution_of(data_, s.leg_b);
    if (!a && !b) return;
    if (!a || !b) {
      add(a ? s.leg_a : s.leg_b);
      return;
    }
    if (b->tau <= a->tau) {
      add(s.leg_b);
      // The contract survives B only when the condition holds.
      if (a->tau > b->tau && condition_outcome_of(s, b->outcome) == 1) add(s.leg_a);
    } else {
      add(s.leg_a);
      if (s.ordering == OrderingRule::kJointAtB) add(s.leg_b);
    }
  }

  void operator()(const SpreadSpec& s) {
    add(s.leg_a);
    add(s.leg_b);
  }

  void operator()(const BasketSpec& s) {
    std::optional<std::pair<TimeMs, LegId>> pick;
    for (const auto& id : s.legs) {
      const auto r = resolution_of(data_, id);
      if (!r) continue;
      const bool better = !pick || (s.halt_policy == BasketHaltPolicy::kClosestLeg ? r->tau < pick->first
                                                                                 : r->tau > pick->first);
      if (better) pick = {r->tau, id};
    }
    if (pick) add(pick->second, pick->first);
  }

  void operator()(const RollingSpec& s) {
    std::vector<TimeMs> taus;
    for (const auto& id : s.constituents) {
      const auto r = resolution_of(data_, id);
      if (!r) return;
      taus.push_back(r->tau);
    }
    const auto schedule = schedule_roll(s.constituents, taus, config_.resolution_zone_ms, s.mechanism,
                                        s.basis_rule);
    // A constituent is still active at its tau when it is last or its roll ran late.
    for (const auto& plan : schedule.plans) {
      if (plan.overlaps_zone) add(s.constituents[plan.from_constituent]);
    }
    if (!s.constituents.empty()) add(s.constituents.back());
  }

  void operator()(const VarianceSpec&) {}
  void operator()(const EntropySpec&) {}
  void operator()(const LiquiditySpec&) {}
  void operator()(const FundingOnlySpec&) {}

  std::vector<HaltWindow> take() { return merge_windows(std::move(out_)); }

 private:
  static int condition_outcome_of(const ConditionalSpec& s, int r_b) { return s.joint_leg ? r_b : 1 - r_b; }

  const MarketData& data_;
  const HaltConfig& config_;
  std::vector<HaltWindow> out_;
};

}  // namespace

std::string_view to_string(HaltStage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

HaltStage halt_stage_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == text) return static_cast<HaltStage>(i);
  }
  throw Error(ErrorCode::kSchemaMismatch, "halt.stage", std::string{text});
}

std::vector<HaltWindow> merge_windows(std::vector<HaltWindow> windows) {
  std::erase_if(windows, [](const HaltWindow& w) { return w.end <= w.start; });
  std::stable_sort(windows.begin(), windows.end(),
                   [](const HaltWindow& a, const HaltWindow& b) { return a.start < b.start; });
  std::vector<HaltWindow> out;
  for (auto& w : windows) {
    if (!out.empty() && w.start <= out.back().end) {
      out.back().end = std::max(out.back().end, w.end);
    } else {
      out.push_back(std::move(w));
    }
  }
  return out;
}

std::vector<HaltWindow> halt_windows(const VariantSpec& spec, const MarketData& data,
                                     const HaltConfig& config) {
  if (config.resolution_zone_ms <= 0) {
    throw Error(ErrorCode::kInvalidParameter, "halt.resolution_zone_ms", "must be positive");
  }
  WindowBuilder builder{data, config};
  std::visit(builder, spec);
  return builder.take();
}

bool in_any_window(std::span<const HaltWindow> windows, TimeMs t) {
  return std::any_of(windows.begin(), windows.end(), [t](const HaltWindow& w) { return w.contains(t); });
}

HaltDecision enforce_halt(std::span<const HaltWindow> windows, const ReplayEvent& event) {
  const auto* order = std::get_if<TraderOrder>(&event);
  if (order == nullptr) return {};
  for (const auto& w : windows) {
    if (w.contains(order->time)) return {false, w};
  }
  return {};
}

RollSchedule schedule_roll(std::span<const LegId> constituents, std::span<const TimeMs> taus,
                           TimeMs resolution_zone_ms, const RollMechanism& mechanism,
                           RollBasisRule basis_rule) {
  if (constituents.size() != taus.size()) throw Error(ErrorCode::kInvalidParameter, "rolling.taus");
  RollSchedule out;
  for (std::size_t i = 0; i + 1 < constituents.size(); ++i) {
    if (taus[i + 1] < taus[i]) {
      throw Error(ErrorCode::kInvalidParameter, "rolling.constituents", "constituents not ordered by tau");
    }
    RollPlan plan;
    plan.from_constituent = i;
    plan.to_constituent = i + 1;
    plan.mechanism = mechanism;
    plan.basis_rule = basis_rule;
    plan.deadline = taus[i] - resolution_zone_ms;
    switch (mechanism.kind) {
      case RollMechanism::Kind::kCliff:
        plan.start = plan.end = taus[i] - mechanism.cliff_lead_ms;
        break;
      case RollMechanism::Kind::kLinear:
        plan.start = taus[i] - mechanism.start_lead_ms;
        plan.end = taus[i] - mechanism.end_lead_ms;
        break;
      case RollMechanism::Kind::kVolumeWeighted:
        plan.start = taus[i] - mechanism.start_lead_ms;
        plan.end = std::max(plan.start, plan.deadline);
        break;
    }
    plan.overlaps_zone = plan.end > plan.deadline;
    if (plan.overlaps_zone) {
      out.warnings.push_back({ErrorCode::kRollOverlapsResolutionZone, constituents[i],
                              "roll completes inside the resolution zone; jump margin stays active"});
    }
    out.plans.push_back(plan);
  }
  return out;
}

double roll_weight(const RollPlan& plan, TimeMs t, std::optional<double> successor_volume) {
  switch (plan.mechanism.kind) {
    case RollMechanism::Kind::kCliff:
      return t >= plan.end ? 1.0 : 0.0;
    case RollMechanism::Kind::kLinear:
      if (t <= plan.start) return 0.0;
      if (t >= plan.end) return 1.0;
      return static_cast<double>(t - plan.start) / static_cast<double>(plan.end - plan.start);
    case RollMechanism::Kind::kVolumeWeighted:
      if (!successor_volume) throw Error(ErrorCode::kMissingVolumeSeries, "rolling.successor");
      if (t < plan.start) return 0.0;
      if (t >= plan.end) return 1.0;
      return std::clamp(*successor_volume / plan.mechanism.volume_target, 0.0, 1.0);
  }
  return 0.0;
}

RollAdjustment apply_roll_basis(std::span<Position> positions, double before, double after,
                                RollBasisRule rule) {
  RollAdjustment out;
  out.cash.assign(positions.size(), 0.0);
  out.realized_basis.assign(positions.size(), 0.0);
  // with nothing to rescale a zero index is harmless
  if (rule == RollBasisRule::kReAnchor && !positions.empty() && (before == 0.0 || after == 0.0)) {
    throw Error(ErrorCode::kZeroIndex, "rolling.basis_rule", "re-anchor needs a non-zero index");
  }
  for (std::size_t i = 0; i < positions.size(); ++i) {
    auto& p = positions[i];
    const double basis = p.notional * direction(p.side) * (after - before);
    switch (rule) {
      case RollBasisRule::kReAnchor: {
        const double r = after / before;
        p.entry_price *= r;
        p.notional /= r;
        break;
      }
      case RollBasisRule::kMaintainNotional:
        out.realized_basis[i] = basis;
        break;
      case RollBasisRule::kCashSettle:
        out.realized_basis[i] = basis;
        out.cash[i] = basis;
        p.entry_price += after - before;
        break;
    }
  }
  return out;
}

std::string_view to_string(RollBasisRule rule) {
  switch (rule) {
    case RollBasisRule::kReAnchor: return "re-anchor";
    case RollBasisRule::kMaintainNotional: return "maintain-notional";
    case RollBasisRule::kCashSettle: return "cash-settle";
  }
  return "";
}

RollBasisRule roll_basis_rule_from_string(std::string_view text) {
  for (auto r : {RollBasisRule::kReAnchor, RollBasisRule::kMaintainNotional, RollBasisRule::kCashSettle}) {
    if (to_string(r) == text) return r;
  }
  throw Error(ErrorCode::kConfigValue, "rolling.basis_rule", std::string{text});
}

}  // namespace evperp
