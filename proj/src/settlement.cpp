#include "evperp/settlement.hpp"

#include <algorithm>
#include <array>

#include "evperp/error.hpp"

namespace evperp {

namespace {

constexpr std::array<std::string_view, 4> kKindNames{"terminal", "early-termination", "roll-conversion",
                                                     "none-perpetual"};

SettlementRecord finish(ContractState& state, Phase phase, SettlementRecord record) {
  state.transition(phase);
  state.underlying = record.value;
  return record;
}

std::string_view termination_tag(TerminationRule::Kind kind) {
  switch (kind) {
    case TerminationRule::Kind::kLastTick: return "last-tick";
    case TerminationRule::Kind::kFixed: return "fixed";
    case TerminationRule::Kind::kTwap: return "twap";
  }
  return "";
}

double last_emitted(const IndexSeries& history, TimeMs t) {
  auto it = std::upper_bound(history.times.begin(), history.times.end(), t);
  if (it == history.times.begin()) throw Error(ErrorCode::kEmptyWindow, "last-tick", "no index emitted");
  return history.values[static_cast<std::size_t>(it - history.times.begin()) - 1];
}

}  // namespace

std::string_view to_string(SettlementKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

SettlementKind settlement_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<SettlementKind>(i);
  }
  throw Error(ErrorCode::kSchemaMismatch, "settlement.kind", std::string{text});
}

double twap(const IndexSeries& index, TimeMs window_end, TimeMs window_len) {
  if (window_len < 0) throw Error(ErrorCode::kInvalidParameter, "twap.window", "negative length");
  if (index.size() == 0 || window_end < index.times.front()) {
    throw Error(ErrorCode::kEmptyWindow, "twap", "window ends before the first observation");
  }
  const TimeMs start = std::max(window_end - window_len, index.times.front());
  if (start == window_end) return last_emitted(index, window_end);

  // First observation at or before start carries into the window.
  auto it = std::upper_bound(index.times.begin(), index.times.end(), start);
  std::size_t k = static_cast<std::size_t>(it - index.times.begin()) - 1;
  double weighted = 0.0;
  TimeMs cursor = start;
  while (cursor < window_end) {
    const TimeMs next = k + 1 < index.size() ? std::min(index.times[k + 1], window_end) : window_end;
    weighted += index.values[k] * static_cast<double>(next - cursor);
    cursor = next;
    ++k;
  }
  return weighted / static_cast<double>(window_end - start);
}

int condition_outcome(const ConditionalSpec& spec, int r_b) { return spec.joint_leg ? r_b : 1 - r_b; }

void freeze_resolution(ContractState& state, const ResolutionEvent& event) {
  state.freeze(event.leg_id, event.record);
}

std::optional<SettlementRecord> settle_conditional(ContractState& state, const ConditionalSpec& spec,
                                                   const ResolutionEvent& event,
                                                   const IndexSeries& history) {
  const bool is_joint = spec.joint_leg && event.leg_id == *spec.joint_leg;
  if (event.leg_id != spec.leg_a && event.leg_id != spec.leg_b && !is_joint) {
    throw Error(ErrorCode::kUnexpectedLeg, event.leg_id);
  }
  if (state.is_absorbed()) return std::nullopt;
  state.freeze(event.leg_id, event.record);
  if (is_joint) return std::nullopt;

  const auto a = state.frozen(spec.leg_a);
  const auto b = state.frozen(spec.leg_b);
  const TimeMs t = event.record.tau;

  if (b) {
    const int cond = condition_outcome(spec, b->outcome);
    // A frozen earlier keeps its joint payoff; a same-time failed condition
    // falls through to early termination like any other failed condition.
    if (a && (a->tau < b->tau || cond == 1)) {
      return finish(state, Phase::kResolved,
                    {t, SettlementKind::kTerminal, static_cast<double>(a->outcome * cond),
                     event.leg_id, a->tau < b->tau ? "joint-at-B" : "condition-met"});
    }
    if (cond == 0) {
      const auto& rule = spec.termination;
      double value = rule.fixed_value;
      if (rule.kind == TerminationRule::Kind::kLastTick) value = last_emitted(history, b->tau);
      if (rule.kind == TerminationRule::Kind::kTwap) value = twap(history, b->tau, rule.twap_window_ms);
      return finish(state, Phase::kTerminatedEarly,
                    {t, SettlementKind::kEarlyTermination, value, spec.leg_b,
                     std::string{termination_tag(rule.kind)}});
    }
    return std::nullopt;  // condition met, keeps tracking A
  }
  if (a && spec.ordering == OrderingRule::kSettleAtA) {
    return finish(state, Phase::kResolved,
                  {t, SettlementKind::kTerminal, static_cast<double>(a->outcome), spec.leg_a,
                   "settle-at-A"});
  }
  return std::nullopt;
}

std::optional<SettlementRecord> settle_spread(ContractState& state, const SpreadSpec& spec,
                                              const ResolutionEvent& event) {
  if (event.leg_id != spec.leg_a && event.leg_id != spec.leg_b) {
    throw Error(ErrorCode::kUnexpectedLeg, event.leg_id);
  }
  if (state.is_absorbed()) return std::nullopt;
  state.freeze(event.leg_id, event.record);
  const auto a = state.frozen(spec.leg_a);
  const auto b = state.frozen(spec.leg_b);
  if (!a || !b) return std::nullopt;
  return finish(state, Phase::kResolved,
                {event.record.tau, SettlementKind::kTerminal,
                 static_cast<double>(a->outcome) - static_cast<double>(b->outcome), event.leg_id,
                 "both-legs"});
}

std::optional<SettlementRecord> settle_basket(ContractState& state, const BasketSpec& spec,
                                              std::span<const double> weights,
                                              const ResolutionEvent& event) {
  if (std::find(spec.legs.begin(), spec.legs.end(), event.leg_id) == spec.legs.end()) {
    throw Error(ErrorCode::kUnexpectedLeg, event.leg_id);
  }
  if (weights.size() != spec.legs.size()) throw Error(ErrorCode::kWeightMismatch, "weights");
  if (state.is_absorbed()) return std::nullopt;
  state.freeze(event.leg_id, event.record);
  std::vector<double> outcomes;
  outcomes.reserve(spec.legs.size());
  for (const auto& id : spec.legs) {
    const auto r = state.frozen(id);
    if (!r) return std::nullopt;
    outcomes.push_back(static_cast<double>(r->outcome));
  }
  const char* tag = spec.rebalance == RebalanceRule::kNone ? "original-weights" : "drop-cascade";
  return finish(state, Phase::kResolved,
                {event.record.tau, SettlementKind::kTerminal, basket_value(outcomes, weights),
                 event.leg_id, tag});
}

std::optional<SettlementRecord> settle_entropy(ContractState& state, const EntropySpec& spec,
                                               const ResolutionEvent& event) {
  if (event.leg_id != spec.leg) throw Error(ErrorCode::kUnexpectedLeg, event.leg_id);
  if (state.is_absorbed()) return std::nullopt;
  state.freeze(event.leg_id, event.record);
  return finish(state, Phase::kResolved,
                {event.record.tau, SettlementKind::kTerminal, 0.0, event.leg_id, "entropy-collapse"});
}

std::optional<SettlementRecord> settle_rolling(ContractState& state, const RollingSpec& spec,
                                               const ResolutionEvent& event) {
  auto it = std::find(spec.constituents.begin(), spec.constituents.end(), event.leg_id);
  if (it == spec.constituents.end()) throw Error(ErrorCode::kUnexpectedLeg, event.leg_id);
  if (state.is_absorbed()) return std::nullopt;
  state.freeze(event.leg_id, event.record);
  if (std::next(it) != spec.constituents.end()) return std::nullopt;
  return finish(state, Phase::kResolved,
                {event.record.tau, SettlementKind::kTerminal, static_cast<double>(event.record.outcome),
                 event.leg_id, "final-constituent"});
}

std::vector<double> basket_terminal_set(std::span<const double> weights) {
  const std::size_t k = weights.size();
  if (k > 24) throw Error(ErrorCode::kInvalidParameter, "weights", "terminal set too large to enumerate");
  std::vector<double> out;
  out.reserve(std::size_t{1} << k);
  std::vector<double> v(k);
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    for (std::size_t i = 0; i < k; ++i) v[i] = (mask >> i) & 1U ? 1.0 : 0.0;
    out.push_back(basket_value(v, weights));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool in_terminal_set(VariantKind kind, double value, std::span<const double> weights) {
  switch (kind) {
    case VariantKind::kConditional:
    case VariantKind::kRolling:
      return value == 0.0 || value == 1.0;
    case VariantKind::kSpread:
      return value == -1.0 || value == 0.0 || value == 1.0;
    case VariantKind::kEntropy:
      return value == 0.0;
    case VariantKind::kBasket: {
      const auto set = basket_terminal_set(weights);
      return std::binary_search(set.begin(), set.end(), value);
    }
    default:
      return false;
  }
}

}  // namespace evperp
