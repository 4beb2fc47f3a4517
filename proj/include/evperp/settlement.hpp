#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evperp/constructors.hpp"
#include "evperp/types.hpp"

namespace evperp {

enum class SettlementKind { kTerminal, kEarlyTermination, kRollConversion, kNonePerpetual };

std::string_view to_string(SettlementKind kind);
SettlementKind settlement_kind_from_string(std::string_view text);

struct SettlementRecord {
  TimeMs time{0};
  SettlementKind kind{SettlementKind::kTerminal};
  double value{0.0};
  std::optional<LegId> triggering_leg;
  std::string rule_applied;

  friend bool operator==(const SettlementRecord&, const SettlementRecord&) = default;
};

/// Time-weighted mean of the LOCF step function over
/// [window_end - window_len, window_end]. The part of the window before the
/// first observation is ignored; a window ending before it is empty.
double twap(const IndexSeries& index, TimeMs window_end, TimeMs window_len);

/// Outcome of the conditioning event. With a joint market it is R^B itself;
/// inside a negRisk group the contract conditions on "not B".
int condition_outcome(const ConditionalSpec& spec, int r_b);

/// Each settle_* freezes the event's leg, then values the contract from
/// every outcome frozen so far. Callers freeze all same-timestamp resolutions
/// before valuing so simultaneous events settle identically in any order.
/// Events after absorption are ignored.
std::optional<SettlementRecord> settle_conditional(ContractState& state, const ConditionalSpec& spec,
                                                   const ResolutionEvent& event,
                                                   const IndexSeries& history);

std::optional<SettlementRecord> settle_spread(ContractState& state, const SpreadSpec& spec,
                                              const ResolutionEvent& event);

/// `weights` are the effective weights at settlement: original under the
/// none rule, post-cascade under drop-on-resolution.
std::optional<SettlementRecord> settle_basket(ContractState& state, const BasketSpec& spec,
                                              std::span<const double> weights,
                                              const ResolutionEvent& event);

std::optional<SettlementRecord> settle_entropy(ContractState& state, const EntropySpec& spec,
                                               const ResolutionEvent& event);

/// Terminal settlement on the last constituent; earlier constituents are
/// handled by the roll machinery and return nothing here.
std::optional<SettlementRecord> settle_rolling(ContractState& state, const RollingSpec& spec,
                                               const ResolutionEvent& event);

/// Freezes without valuing; the replay uses it to apply a same-timestamp batch.
void freeze_resolution(ContractState& state, const ResolutionEvent& event);

/// Every value a basket can settle at under `weights`, summed in index order.
std::vector<double> basket_terminal_set(std::span<const double> weights);

/// Exact membership in the variant's discrete terminal set.
bool in_terminal_set(VariantKind kind, double value, std::span<const double> weights = {});

}  // namespace evperp
