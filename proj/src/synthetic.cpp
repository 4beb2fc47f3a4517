#include "evperp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/special_functions/erf.hpp>

#include "evperp/error.hpp"

namespace evperp {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::kInvalidParameter, "p", "quantile needs p in (0,1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

namespace {

std::vector<TimeMs> grid_times(TimeMs start, TimeMs horizon, TimeMs grid) {
  if (horizon <= 0 || grid <= 0) throw Error(ErrorCode::kInvalidParameter, "horizon_ms", "need positive horizon and grid");
  std::vector<TimeMs> out;
  for (TimeMs t = 0; t < horizon; t += grid) out.push_back(start + t);
  out.push_back(start + horizon);
  return out;
}

}  // namespace

LegSeries generate_bridge_path(std::uint64_t seed, TimeMs horizon_ms, TimeMs grid_ms, double p0,
                               const LegId& leg_id, TimeMs start_ms) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw Error(ErrorCode::kInvalidParameter, "p0", "must lie in (0,1)");
  const auto times = grid_times(start_ms, horizon_ms, grid_ms);
  std::mt19937_64 rng{seed};
  std::normal_distribution<double> z;
  LegSeries leg;
  leg.leg_id = leg_id;
  double w = normal_quantile(p0);
  double s_prev = 0.0;
  leg.points.push_back({times.front(), p0});
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double s = static_cast<double>(times[k] - start_ms) / static_cast<double>(horizon_ms);
    w += std::sqrt(s - s_prev) * z(rng);
    s_prev = s;
    if (k + 1 < times.size()) {
      const double p = normal_cdf(w / std::sqrt(1.0 - s));
      leg.points.push_back({times[k], std::clamp(p, kBridgeEdge, 1.0 - kBridgeEdge)});
    }
  }
  const int outcome = w > 0.0 ? 1 : 0;
  leg.points.push_back({times.back(), static_cast<double>(outcome)});
  leg.resolution = ResolutionRecord{times.back(), outcome};
  return leg;
}

NegRiskSample generate_negrisk_group(std::uint64_t seed, std::size_t k, TimeMs horizon_ms, TimeMs grid_ms,
                                     TimeMs start_ms) {
  if (k < 2) throw Error(ErrorCode::kInvalidParameter, "legs", "negRisk group needs k >= 2");
  const auto times = grid_times(start_ms, horizon_ms, grid_ms);
  std::mt19937_64 rng{seed};
  std::normal_distribution<double> z;
  NegRiskSample out;
  out.group.group_id = "group";
  out.legs.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    out.legs[j].leg_id = "leg" + std::to_string(j);
    out.group.members.push_back(out.legs[j].leg_id);
  }
  std::vector<double> log_x(k, 0.0);
  std::vector<double> weights(k, 1.0 / static_cast<double>(k));
  for (std::size_t step = 0; step + 1 < times.size(); ++step) {
    if (step > 0) {
      const double dt = static_cast<double>(times[step] - times[step - 1]) / static_cast<double>(horizon_ms);
      for (auto& x : log_x) x += std::sqrt(dt) * z(rng);
    }
    const double top = *std::max_element(log_x.begin(), log_x.end());
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += (weights[j] = std::exp(log_x[j] - top));
    for (auto& w : weights) w /= total;
    for (std::size_t j = 0; j < k; ++j) out.legs[j].points.push_back({times[step], weights[j]});
  }
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  const std::size_t winner = pick(rng);
  for (std::size_t j = 0; j < k; ++j) {
    const int outcome = j == winner ? 1 : 0;
    out.legs[j].points.push_back({times.back(), static_cast<double>(outcome)});
    out.legs[j].resolution = ResolutionRecord{times.back(), outcome};
  }
  return out;
}

MarketData to_market_data(std::vector<LegSeries> legs, std::vector<NegRiskGroup> groups) {
  MarketData data;
  for (auto& leg : legs) {
    const LegId id = leg.leg_id;
    if (!data.legs.emplace(id, std::move(leg)).second) throw Error(ErrorCode::kDuplicateLeg, id);
  }
  data.groups = std::move(groups);
  return data;
}

namespace {

constexpr TimeMs kBatteryHorizon = 10 * kDayMs;
constexpr TimeMs kBatteryGrid = 10 * 60 * kSecondMs;
constexpr double kBatteryNotional = 100.0;
constexpr double kBatteryLeverage = 5.0;

}  // namespace

CollapseScenario collapse_scenario(std::uint64_t seed, std::size_t index, BatteryConfig config) {
  std::mt19937_64 rng{seed};
  std::uniform_int_distribution<TimeMs> tau_step(static_cast<TimeMs>(0.4 * kBatteryHorizon / kBatteryGrid),
                                                 static_cast<TimeMs>(0.8 * kBatteryHorizon / kBatteryGrid));
  const TimeMs tau = tau_step(rng) * kBatteryGrid;

  auto leg = generate_bridge_path(seed, kBatteryHorizon, kBatteryGrid, 0.5, "event");
  std::erase_if(leg.points, [tau](const ProbabilityPoint& p) { return p.time >= tau; });
  std::bernoulli_distribution resolves_yes(leg.points.back().value);
  leg.resolution = ResolutionRecord{tau, resolves_yes(rng) ? 1 : 0};

  CollapseScenario out;
  out.tau = tau;
  BasketSpec basket;
  basket.legs = {"event"};
  basket.weight_rule.kind = WeightRule::Kind::kStatic;
  basket.weight_rule.weights = {1.0};
  out.spec = basket;
  const double open_price = leg.points[1].value;
  out.data = to_market_data({std::move(leg)});

  auto& rc = out.config;
  rc.grid_ms = kBatteryGrid;
  rc.seed = seed;
  rc.granularity = ReportGranularity::kSummary;
  rc.halt_enabled = config == BatteryConfig::kHaltsOnly;
  rc.risk.margin.base_rate = 0.05;
  if (config == BatteryConfig::kJumpMargin) {
    rc.risk.margin.jump_coeff = 1.0;
    rc.risk.margin.aggregation = JumpAggregation::kSum;
    rc.risk.margin.proximity_horizon_ms = 2 * kBatteryHorizon;
  }

  const Side side = index % 2 == 0 ? Side::kLong : Side::kShort;
  const TimeMs open_time = kBatteryGrid;
  const TimeMs ttt = tau - open_time;
  double leverage = std::min(kBatteryLeverage,
                             max_leverage(ttt, rc.risk.leverage, rc.halt.resolution_zone_ms));
  JumpInputs jump;
  jump.kind = VariantKind::kBasket;
  jump.leg_values = {open_price};
  jump.weights = {1.0};
  jump.aggregation = rc.risk.margin.aggregation;
  const double maintenance = maintenance_margin(kBatteryNotional, jump_magnitude(jump, side), rc.risk.margin, ttt);
  // A small buffer keeps the opening margin strictly above maintenance.
  leverage = std::min(leverage, kBatteryNotional / (maintenance * 1.01));
  rc.orders.push_back({open_time, "leveraged", side, kBatteryNotional, leverage});

  const TimeMs zone = rc.halt.resolution_zone_ms;
  const TimeMs noise_times[] = {tau - zone + kBatteryGrid, tau - zone / 2, tau - 2 * kBatteryGrid};
  for (std::size_t i = 0; i < std::size(noise_times); ++i) {
    rc.orders.push_back({noise_times[i], "noise", i % 2 == 0 ? Side::kLong : Side::kShort, 10.0, 1.0});
  }
  return out;
}

BatterySummary run_collapse_battery(std::size_t scenarios, std::uint64_t base_seed, BatteryConfig config) {
  BatterySummary out;
  for (std::size_t i = 0; i < scenarios; ++i) {
    const auto scenario = collapse_scenario(base_seed + i, i, config);
    const auto report = replay(scenario.spec, scenario.data, scenario.config);
    if (!report.complete) throw Error(ErrorCode::kInvalidParameter, "battery", report.error);
    ++out.scenarios;
    if (report.bad_debt_total > 0.0) ++out.bad_debt_count;
    out.liquidation_count += report.liquidations.size();
    out.in_window_fills += report.orders_filled_in_halt_windows;
    out.bad_debt_total += report.bad_debt_total;
    out.max_abs_residual = std::max(out.max_abs_residual, std::abs(report.conservation_residual()));
  }
  return out;
}

}  // namespace evperp
