#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evperp/constructors.hpp"
#include "evperp/halt_roll.hpp"
#include "evperp/risk.hpp"
#include "evperp/settlement.hpp"
#include "evperp/types.hpp"

namespace evperp {

/// Mean-reverting synthetic basis added to the index to form the mark.
/// Zero volatility (the default) keeps mark == index.
struct BasisOverlay {
  double reversion{0.1};   // per index update
  double volatility{0.0};  // per index update, in underlying units

  friend bool operator==(const BasisOverlay&, const BasisOverlay&) = default;
};

/// Seeded scripted order flow: each trader places `orders_per_trader`
/// orders at uniform times over the data span with a random side.
struct SyntheticPopulation {
  std::size_t traders{0};
  std::size_t orders_per_trader{1};
  double notional{100.0};
  double leverage{2.0};

  friend bool operator==(const SyntheticPopulation&, const SyntheticPopulation&) = default;
};

enum class ReportGranularity { kTick, kSummary };

struct ReplayConfig {
  TimeMs grid_ms{kDefaultGridMs};
  std::uint64_t seed{0};
  std::vector<TraderOrder> orders;
  SyntheticPopulation population{};
  RiskConfig risk{};
  HaltConfig halt{};
  bool halt_enabled{true};
  ReportGranularity granularity{ReportGranularity::kTick};
  BasisOverlay basis{};

  friend bool operator==(const ReplayConfig&, const ReplayConfig&) = default;
};

struct IndexTick {
  TimeMs time{0};
  double index{0.0};
  double mark{0.0};
  bool gap{false};
  friend bool operator==(const IndexTick&, const IndexTick&) = default;
};

struct FundingRecord {
  TimeMs time{0};
  double rate{0.0};
  double trader_transfers{0.0};  // sum over positions; the pool takes the negation
  friend bool operator==(const FundingRecord&, const FundingRecord&) = default;
};

struct LiquidationRecord {
  TimeMs time{0};
  TraderId trader_id;
  Side side{Side::kLong};
  double notional{0.0};
  double fill_price{0.0};
  double equity_at_fill{0.0};
  double shortfall{0.0};
  friend bool operator==(const LiquidationRecord&, const LiquidationRecord&) = default;
};

struct OrderRecord {
  TimeMs time{0};
  TraderId trader_id;
  Side side{Side::kLong};
  double notional{0.0};
  double leverage{0.0};
  bool filled{false};
  std::string reason;  // empty when filled
  friend bool operator==(const OrderRecord&, const OrderRecord&) = default;
};

struct RollRecord {
  TimeMs time{0};
  std::size_t from_constituent{0};
  std::size_t to_constituent{0};
  double lambda_before{0.0};
  double lambda_after{0.0};
  double value_before{0.0};
  double value_after{0.0};
  RollBasisRule rule{RollBasisRule::kReAnchor};
  double realized_basis{0.0};
  double cash{0.0};
  friend bool operator==(const RollRecord&, const RollRecord&) = default;
};

struct ReplayReport {
  std::string variant;
  std::uint64_t seed{0};
  bool complete{true};
  std::string error;
  std::vector<std::string> caveats;
  std::vector<std::string> warnings;
  bool halts_enforced{true};

  std::vector<IndexTick> ticks;
  std::vector<FundingRecord> funding;
  std::vector<LiquidationRecord> liquidations;
  std::vector<OrderRecord> orders;
  std::vector<HaltWindow> halt_windows;
  std::vector<RollRecord> rolls;
  std::vector<Discontinuity> discontinuities;
  std::vector<SettlementRecord> settlements;  // roll conversions, then the final record
  std::vector<double> settlement_weights;     // basket only

  double bad_debt_total{0.0};
  double trader_equity_change{0.0};  // uncapped, so losses beyond margin show
  double pool_change{0.0};           // what the counterparty pool actually moved
  std::size_t price_updates{0};
  std::size_t orders_filled_in_halt_windows{0};

  /// trader change + pool change + bad debt; zero up to rounding.
  [[nodiscard]] double conservation_residual() const {
    return trader_equity_change + pool_change + bad_debt_total;
  }
  [[nodiscard]] const SettlementRecord* final_settlement() const {
    return settlements.empty() ? nullptr : &settlements.back();
  }
  [[nodiscard]] std::size_t liquidation_count() const noexcept { return liquidations.size(); }

  friend bool operator==(const ReplayReport&, const ReplayReport&) = default;
};

inline constexpr const char* kReflexivityCaveat = "REFLEXIVITY-CAVEAT";

/// Full lifecycle replay. Validation problems throw before any event is
/// processed; errors during processing return a report with complete=false.
ReplayReport replay(const VariantSpec& spec, const MarketData& data, const ReplayConfig& config);

/// The underlying series alone, built with the same streaming machinery as
/// replay (no orders, funding or halts).
IndexSeries build_index(const VariantSpec& spec, const MarketData& data, TimeMs grid_ms = kDefaultGridMs);

}  // namespace evperp
