#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evperp/align.hpp"
#include "evperp/types.hpp"

namespace evperp {

/// Declared interval an underlying lives in. Open ends use infinities.
struct Support {
  double lo{0.0};
  double hi{1.0};

  [[nodiscard]] bool contains(double x, double slack = 0.0) const {
    return x >= lo - slack && x <= hi + slack;
  }
  friend bool operator==(const Support&, const Support&) = default;
};

inline constexpr Support kUnitSupport{0.0, 1.0};
inline constexpr Support kSpreadSupport{-1.0, 1.0};
inline constexpr Support kLevelVarianceSupport{0.0, 0.25};
inline constexpr Support kNonNegativeSupport{0.0, std::numeric_limits<double>::infinity()};
inline constexpr Support kRealSupport{-std::numeric_limits<double>::infinity(),
                                      std::numeric_limits<double>::infinity()};

/// Support a variant's underlying is declared on.
Support declared_support(const VariantSpec& spec);

struct IndexSeries {
  std::vector<TimeMs> times;
  std::vector<double> values;
  /// 1 where the value is a flagged gap (conditional floor halt).
  std::vector<std::uint8_t> gaps;
  Support support{kUnitSupport};
  VariantKind provenance{VariantKind::kConditional};

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  void push(TimeMs t, double v, bool gap = false) {
    times.push_back(t);
    values.push_back(v);
    gaps.push_back(gap ? 1 : 0);
  }
};

/// Index jump caused by a rule rather than by a price move.
struct Discontinuity {
  TimeMs time{0};
  double pre{0.0};
  double post{0.0};
  std::string cause;

  friend bool operator==(const Discontinuity&, const Discontinuity&) = default;
};

// ---------------------------------------------------------------------------
// Conditional
// ---------------------------------------------------------------------------

inline constexpr double kDefaultDenomFloor = 0.01;
inline constexpr double kNoHistoryConditional = 0.5;

struct FloorRule {
  double floor{kDefaultDenomFloor};
  FloorAction action{FloorAction::kClipToLast};
};

struct ConditionalSample {
  double value{0.0};
  bool gap{false};
};

/// Streaming floor machinery shared by the series constructors and replay.
/// Below the floor, emits the last valid value (0.5 before any), flagged as
/// a gap under the halt action.
class ConditionalFloor {
 public:
  explicit ConditionalFloor(FloorRule rule, std::optional<double> last_valid = std::nullopt)
      : rule_(rule), last_valid_(last_valid) {}

  ConditionalSample step(double joint, double denom);
  [[nodiscard]] std::optional<double> last_valid() const noexcept { return last_valid_; }

 private:
  FloorRule rule_;
  std::optional<double> last_valid_;
};

IndexSeries conditional_index(std::span<const TimeMs> times, std::span<const double> joint,
                              std::span<const double> denom, FloorRule rule,
                              std::optional<double> last_valid = std::nullopt);

/// P(A_i | not A_j) inside a negRisk group: p_i / (1 - p_j).
IndexSeries negrisk_conditional(std::span<const TimeMs> times, std::span<const double> p_i,
                                std::span<const double> p_j, FloorRule rule);
IndexSeries negrisk_conditional(const AlignedGrid& grid, const LegId& leg_i, const LegId& leg_j,
                                FloorRule rule);

// ---------------------------------------------------------------------------
// Spread
// ---------------------------------------------------------------------------

/// Value of one leg with its frozen outcome applied from tau onward.
inline double leg_value(double observed, const std::optional<ResolutionRecord>& frozen, TimeMs t) {
  return frozen && t >= frozen->tau ? static_cast<double>(frozen->outcome) : observed;
}

IndexSeries spread_index(std::span<const TimeMs> times, std::span<const double> a,
                         std::span<const double> b,
                         const std::optional<ResolutionRecord>& frozen_a = std::nullopt,
                         const std::optional<ResolutionRecord>& frozen_b = std::nullopt);

// ---------------------------------------------------------------------------
// Basket
// ---------------------------------------------------------------------------

/// Sum of w_i * v_i in index order.
double basket_value(std::span<const double> values, std::span<const double> weights);

std::vector<double> equal_weights(std::size_t k);
/// Normalizes non-negative raw weights to sum to one.
std::vector<double> normalize_weights(std::span<const double> raw);

struct RebalanceOutcome {
  std::vector<double> weights;
  std::optional<Discontinuity> discontinuity;
};

/// Drop rule zeroes the resolved leg and renormalizes survivors. When leg
/// values are given, the index jump is reported as a discontinuity.
RebalanceOutcome rebalance_weights(std::span<const double> weights, std::size_t resolved_leg,
                                   RebalanceRule rule,
                                   std::span<const double> values = {}, TimeMs time = 0);
/// Same-timestamp resolutions are dropped together so the result does not
/// depend on processing order.
RebalanceOutcome rebalance_weights(std::span<const double> weights,
                                   std::span<const std::size_t> resolved_legs, RebalanceRule rule,
                                   std::span<const double> values = {}, TimeMs time = 0);

struct BasketSeries {
  IndexSeries index;
  std::vector<Discontinuity> discontinuities;
  std::vector<double> final_weights;
};

/// Basket over aligned rows. Resolved legs contribute w_i * R_i under the
/// none rule and are dropped (with renormalization) under the drop rule.
BasketSeries basket_index(const AlignedGrid& grid, const std::vector<LegId>& legs,
                          std::span<const double> weights, RebalanceRule rule);

/// Point-in-time basket weights from cumulative traded volume up to the
/// snapshot time.
std::vector<double> volume_snapshot_weights(const MarketData& data, const std::vector<LegId>& legs,
                                            TimeMs snapshot_ms);

// ---------------------------------------------------------------------------
// Variance
// ---------------------------------------------------------------------------

/// Streaming rolling-window variance on a uniform grid, O(1) amortized per
/// sample. Samples at tick spacing are taken from the grid stream; a value
/// is available once a full window lies behind the current time.
class RollingVariance {
 public:
  RollingVariance(const VarianceSpec& spec, TimeMs grid_ms);

  /// Feeds the next grid value; returns the index once the window is full.
  std::optional<double> push(double value);

  [[nodiscard]] std::size_t samples_per_window() const noexcept { return window_samples_; }

 private:
  struct Phase {
    std::vector<double> ring;  // level samples, capacity window_samples_
    std::size_t head{0};
    std::size_t count{0};
    double sum{0.0};       // of (x - pivot) or squared increments
    double sum_sq{0.0};    // of (x - pivot)^2
    std::vector<double> inc_ring;
    std::size_t inc_head{0};
    std::size_t inc_count{0};
    std::size_t since_rebase{0};
    std::optional<double> last;
  };

  void rebase(Phase& phase) const;

  VarianceSpec spec_;
  std::size_t stride_;
  std::size_t window_samples_;  // level samples per window (increments: one fewer)
  std::size_t pushed_{0};
  std::optional<double> pivot_;
  std::vector<Phase> phases_;
};

IndexSeries variance_index(std::span<const TimeMs> times, std::span<const double> values,
                           const VarianceSpec& spec, TimeMs grid_ms);

// ---------------------------------------------------------------------------
// Entropy
// ---------------------------------------------------------------------------

/// Binary Shannon entropy in bits with 0 log 0 = 0.
double binary_entropy(double p);

IndexSeries entropy_index(std::span<const TimeMs> times, std::span<const double> p);

// ---------------------------------------------------------------------------
// Liquidity
// ---------------------------------------------------------------------------

inline constexpr double kDefaultAmihudFloor = 1e-6;

double median_of(std::vector<double> values);
double amihud_value(double volume, double abs_price_change, double floor = kDefaultAmihudFloor);

/// Median half-spread across members, member depth (mean or median), or
/// volume / |price change| per grid window (from the second grid point on).
IndexSeries liquidity_index(const AlignedGrid& grid, const LiquiditySpec& spec);

// ---------------------------------------------------------------------------
// Funding-only targets
// ---------------------------------------------------------------------------

/// Basis target: x = mark, y = index, signed. Divergence: |x - y|.
double funding_target_value(FundingTargetSpec::Kind kind, double x, double y);

IndexSeries funding_target(FundingTargetSpec::Kind kind, std::span<const TimeMs> times,
                           std::span<const double> x, std::span<const double> y);

}  // namespace evperp
