#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evperp/replay.hpp"
#include "evperp/types.hpp"

namespace evperp {

double normal_cdf(double x);
double normal_quantile(double p);

/// Pre-terminal bridge values are kept this far inside (0, 1).
inline constexpr double kBridgeEdge = 1e-12;

/// Probability bridge p_t = Phi(W_s / sqrt(1 - s)), s = t / T, with W a
/// standard Brownian motion started at Phi^-1(p0). The point at T is the
/// outcome 1{W_1 > 0}, which is also the resolution.
LegSeries generate_bridge_path(std::uint64_t seed, TimeMs horizon_ms, TimeMs grid_ms, double p0,
                               const LegId& leg_id = "bridge", TimeMs start_ms = 0);

struct NegRiskSample {
  std::vector<LegSeries> legs;
  NegRiskGroup group;
};

/// k geometric random walks normalized onto the simplex at every grid point.
/// The winner is drawn in proportion to the last pre-terminal weights; the
/// points at T are the outcomes. Normalization gives up per-leg martingality.
NegRiskSample generate_negrisk_group(std::uint64_t seed, std::size_t k, TimeMs horizon_ms, TimeMs grid_ms,
                                     TimeMs start_ms = 0);

MarketData to_market_data(std::vector<LegSeries> legs, std::vector<NegRiskGroup> groups = {});

// ---------------------------------------------------------------------------
// Collapse battery
// ---------------------------------------------------------------------------

enum class BatteryConfig { kNaive, kHaltsOnly, kJumpMargin };

struct CollapseScenario {
  VariantSpec spec;
  MarketData data;
  ReplayConfig config;
  TimeMs tau{0};
};

/// Bridge truncated at a random tau with outcome drawn from the pre-tau
/// probability, wrapped as a one-leg basket. A leveraged trader opens early
/// at the largest leverage the venue accepts (capped at 5); a leverage-1
/// trader places orders inside the resolution zone.
CollapseScenario collapse_scenario(std::uint64_t seed, std::size_t index, BatteryConfig config);

struct BatterySummary {
  std::size_t scenarios{0};
  std::size_t bad_debt_count{0};  // scenarios with any bad debt
  std::size_t liquidation_count{0};
  std::size_t in_window_fills{0};
  double bad_debt_total{0.0};
  double max_abs_residual{0.0};
};

BatterySummary run_collapse_battery(std::size_t scenarios, std::uint64_t base_seed, BatteryConfig config);

}  // namespace evperp
