#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "../support/builders.hpp"
#include "evperp/replay.hpp"
#include "evperp/synthetic.hpp"

using namespace evperp;

namespace {

constexpr TimeMs kGrid = kHourMs;

/// One leg holding at `p` for `hours`, then resolving to `outcome`.
MarketData collapse_leg(double p, int hours, int outcome) {
  std::vector<double> v(static_cast<std::size_t>(hours), p);
  auto leg = build::grid_leg("E", v, kGrid, ResolutionRecord{hours * kGrid, outcome});
  leg.points.push_back({hours * kGrid, static_cast<double>(outcome)});
  return build::data({leg});
}

BasketSpec one_leg_basket(const LegId& id) {
  BasketSpec b;
  b.legs = {id};
  b.weight_rule.kind = WeightRule::Kind::kStatic;
  b.weight_rule.weights = {1.0};
  return b;
}

ReplayConfig base_config() {
  ReplayConfig rc;
  rc.grid_ms = kGrid;
  rc.halt.resolution_zone_ms = 6 * kGrid;
  rc.risk.leverage.floor = 5.0;
  return rc;
}

bool has_caveat(const ReplayReport& r) {
  return std::any_of(r.caveats.begin(), r.caveats.end(),
                     [](const std::string& c) { return c.rfind(kReflexivityCaveat, 0) == 0; });
}

/// A spec for every variant over bridge data with legs leg0..leg3.
std::vector<VariantSpec> every_variant() {
  ConditionalSpec c;
  c.leg_a = "leg0";
  c.leg_b = "leg1";
  c.joint_leg = "leg2";
  VarianceSpec v;
  v.leg = "leg0";
  v.tick_ms = kGrid;
  v.window_ms = 6 * kGrid;
  LiquiditySpec l;
  l.member_legs = {"leg0", "leg1"};
  RollingSpec r;
  r.constituents = {"leg0", "leg3"};
  r.mechanism.kind = RollMechanism::Kind::kLinear;
  r.mechanism.start_lead_ms = 40 * kGrid;
  r.mechanism.end_lead_ms = 10 * kGrid;
  // re-anchor refuses a zero mark, which a clamped basis overlay can print
  r.basis_rule = RollBasisRule::kCashSettle;
  FundingOnlySpec h;
  h.target.leg_a = "leg0";
  BasketSpec b;
  b.legs = {"leg0", "leg1", "leg2"};
  return {c, SpreadSpec{"leg0", "leg1"}, b, v, EntropySpec{"leg0"}, l, r, h};
}

MarketData bridge_data(std::uint64_t seed) {
  std::vector<LegSeries> legs;
  for (int i = 0; i < 4; ++i) {
    const TimeMs horizon = (i == 3 ? 200 : 100 + 20 * i) * kGrid;
    auto leg = generate_bridge_path(seed * 10 + static_cast<std::uint64_t>(i), horizon, kGrid, 0.5,
                                    "leg" + std::to_string(i));
    leg.half_spread = std::vector<double>(leg.points.size(), 0.01);
    legs.push_back(std::move(leg));
  }
  return to_market_data(std::move(legs));
}

ReplayConfig populated(std::uint64_t seed) {
  auto rc = base_config();
  rc.seed = seed;
  rc.population.traders = 8;
  rc.population.orders_per_trader = 4;
  rc.population.leverage = 3.0;
  rc.risk.margin.jump_coeff = 0.5;
  rc.basis.volatility = 0.01;
  return rc;
}

}  // namespace

TEST_CASE("empty order script: no positions, no liquidations") {
  const auto rep = replay(one_leg_basket("E"), collapse_leg(0.9, 48, 0), base_config());
  CHECK(rep.complete);
  CHECK(rep.liquidation_count() == 0);
  CHECK(rep.bad_debt_total == 0.0);
  CHECK(rep.orders.empty());
  REQUIRE(rep.final_settlement() != nullptr);
  CHECK(rep.final_settlement()->value == 0.0);
}

TEST_CASE("single long through a collapse") {
  const auto data = collapse_leg(0.9, 48, 0);
  SUBCASE("naive margin leaves bad debt") {
    auto rc = base_config();
    rc.halt_enabled = false;
    rc.orders = {TraderOrder{0, "u", Side::kLong, 100, 5}};
    const auto rep = replay(one_leg_basket("E"), data, rc);
    REQUIRE(rep.orders.size() == 1);
    CHECK(rep.orders[0].filled);
    CHECK(rep.bad_debt_total > 0.0);
    CHECK(std::abs(rep.conservation_residual()) <= 1e-9);
  }
  SUBCASE("jump margin with m_J = 1 leaves none") {
    auto rc = base_config();
    rc.risk.margin.jump_coeff = 1.0;
    rc.risk.margin.aggregation = JumpAggregation::kSum;
    rc.risk.margin.proximity_horizon_ms = 1000 * kGrid;
    rc.orders = {TraderOrder{0, "u", Side::kLong, 100, 5}, TraderOrder{0, "v", Side::kLong, 100, 1}};
    const auto rep = replay(one_leg_basket("E"), data, rc);
    REQUIRE(rep.orders.size() == 2);
    CHECK_FALSE(rep.orders[0].filled);
    CHECK(rep.orders[0].reason == "margin");
    CHECK(rep.orders[1].filled);
    CHECK(rep.bad_debt_total == 0.0);
    CHECK(std::abs(rep.conservation_residual()) <= 1e-9);
  }
}

TEST_CASE("halts reject in-window orders and leave others alone") {
  const auto data = collapse_leg(0.5, 48, 1);
  const TimeMs tau = 48 * kGrid;
  auto rc = base_config();
  rc.orders = {TraderOrder{tau - 3 * kGrid, "in", Side::kLong, 10, 1},
               TraderOrder{tau - 7 * kGrid, "out", Side::kLong, 10, 1}};
  const auto on = replay(one_leg_basket("E"), data, rc);
  rc.halt_enabled = false;
  const auto off = replay(one_leg_basket("E"), data, rc);
  REQUIRE(on.orders.size() == 2);
  REQUIRE(off.orders.size() == 2);
  for (const auto& o : on.orders) CHECK(o.filled == (o.trader_id == "out"));
  for (const auto& o : off.orders) CHECK(o.filled);
  CHECK(on.orders_filled_in_halt_windows == 0);
  CHECK(on.halts_enforced);
  CHECK_FALSE(off.halts_enforced);
  CHECK(on.ticks == off.ticks);
}

TEST_CASE("replay is deterministic in its seed") {
  const auto data = bridge_data(3);
  for (const auto& spec : every_variant()) {
    const auto a = replay(spec, data, populated(11));
    const auto b = replay(spec, data, populated(11));
    CHECK(a == b);
    const auto c = replay(spec, data, populated(12));
    CHECK(c.orders != a.orders);
  }
}

TEST_CASE("conservation on random replays of every variant") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto data = bridge_data(seed);
    for (const auto& spec : every_variant()) {
      auto rc = populated(seed);
      rc.risk.margin.jump_coeff = (seed % 2 == 0) ? 0.0 : 0.5;
      rc.halt_enabled = seed % 3 != 0;
      const auto rep = replay(spec, data, rc);
      INFO("variant " << rep.variant << " seed " << seed << " error " << rep.error);
      CHECK(rep.complete);
      CHECK(std::abs(rep.conservation_residual()) <= 1e-9);
      for (const auto& f : rep.funding) CHECK(std::isfinite(f.rate));
      for (const auto& t : rep.ticks) {
        CHECK(std::isfinite(t.index));
        CHECK(std::isfinite(t.mark));
      }
    }
  }
}

TEST_CASE("re-anchor roll keeps trader pnl continuous across the conversion") {
  std::mt19937_64 rng{17};
  auto a = build::grid_leg("a", build::walk(rng, 100, 0.3, 0.7, 0.02), kGrid, ResolutionRecord{100 * kGrid, 1});
  a.points.push_back({100 * kGrid, 1.0});
  auto b = build::grid_leg("b", build::walk(rng, 200, 0.3, 0.7, 0.02), kGrid, ResolutionRecord{200 * kGrid, 0});
  b.points.push_back({200 * kGrid, 0.0});
  RollingSpec r;
  r.constituents = {"a", "b"};
  r.mechanism.kind = RollMechanism::Kind::kLinear;
  r.mechanism.start_lead_ms = 40 * kGrid;
  r.mechanism.end_lead_ms = 10 * kGrid;
  auto rc = base_config();
  rc.orders = {TraderOrder{0, "u", Side::kLong, 100, 1}, TraderOrder{0, "v", Side::kShort, 100, 1}};
  const auto rep = replay(r, build::data({a, b}), rc);
  CHECK(rep.complete);
  CHECK_FALSE(rep.rolls.empty());
  for (const auto& roll : rep.rolls) {
    CHECK(roll.cash == 0.0);
    CHECK(roll.lambda_after > roll.lambda_before);
  }
  REQUIRE(rep.settlements.size() >= 2);
  CHECK(rep.settlements.front().kind == SettlementKind::kRollConversion);
  CHECK(rep.settlements.front().time <= 90 * kGrid);
  CHECK(std::abs(rep.conservation_residual()) <= 1e-9);
}

TEST_CASE("the index is causal: truncating the future leaves the past unchanged") {
  const auto full = bridge_data(5);
  const TimeMs cut = 60 * kGrid;
  MarketData trunc = full;
  for (auto& [id, leg] : trunc.legs) {
    std::size_t n = 0;
    while (n < leg.points.size() && leg.points[n].time <= cut) ++n;
    leg.points.resize(n);
    if (leg.half_spread) leg.half_spread->resize(n);
    leg.resolution.reset();
  }
  for (const auto& spec : every_variant()) {
    if (std::holds_alternative<RollingSpec>(spec)) continue;  // needs a tau to schedule against
    const auto a = build_index(spec, full, kGrid);
    const auto b = build_index(spec, trunc, kGrid);
    std::size_t checked = 0;
    for (std::size_t i = 0; i < b.size() && i < a.size(); ++i) {
      if (b.times[i] > cut) break;
      CHECK(a.times[i] == b.times[i]);
      CHECK(a.values[i] == b.values[i]);
      CHECK(a.gaps[i] == b.gaps[i]);
      ++checked;
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("bridge paths") {
  SUBCASE("pre-terminal values stay strictly inside and the end is the outcome") {
    for (std::uint64_t s = 0; s < 50; ++s) {
      const auto leg = generate_bridge_path(s, 100 * kGrid, kGrid, 0.3);
      REQUIRE(leg.resolution.has_value());
      CHECK(leg.points.back().time == leg.resolution->tau);
      CHECK(leg.points.back().value == static_cast<double>(leg.resolution->outcome));
      for (std::size_t i = 0; i + 1 < leg.points.size(); ++i) {
        CHECK(leg.points[i].value >= kBridgeEdge);
        CHECK(leg.points[i].value <= 1 - kBridgeEdge);
      }
      CHECK(leg.points.front().value == doctest::Approx(0.3));
    }
  }
  SUBCASE("outcome frequency matches p0") {
    int ones = 0;
    const int n = 10000;
    for (int s = 0; s < n; ++s) ones += generate_bridge_path(static_cast<std::uint64_t>(s), 8 * kGrid, kGrid, 0.5).resolution->outcome;
    CHECK(std::abs(static_cast<double>(ones) / n - 0.5) <= 0.02);
  }
  SUBCASE("same seed, same path") {
    CHECK(generate_bridge_path(9, 50 * kGrid, kGrid, 0.5) == generate_bridge_path(9, 50 * kGrid, kGrid, 0.5));
  }
}

TEST_CASE("negRisk groups sum to one and have exactly one winner") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const std::size_t k = 2 + s % 5;
    const auto g = generate_negrisk_group(s, k, 50 * kGrid, kGrid);
    REQUIRE(g.legs.size() == k);
    CHECK(g.group.members.size() == k);
    int winners = 0;
    for (const auto& l : g.legs) winners += l.resolution->outcome;
    CHECK(winners == 1);
    for (std::size_t i = 0; i < g.legs[0].points.size(); ++i) {
      double sum = 0;
      for (const auto& l : g.legs) {
        REQUIRE(l.points.size() == g.legs[0].points.size());
        CHECK(l.points[i].time == g.legs[0].points[i].time);
        sum += l.points[i].value;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("reflexivity caveat is attached to F and H only") {
  const auto data = bridge_data(7);
  for (const auto& spec : every_variant()) {
    const auto rep = replay(spec, data, base_config());
    const bool has = has_caveat(rep);
    const bool expected = std::holds_alternative<LiquiditySpec>(spec) || std::holds_alternative<FundingOnlySpec>(spec);
    INFO(rep.variant);
    CHECK(has == expected);
  }
}

TEST_CASE("collapse battery: jump margin removes bad debt that naive margin leaves") {
  const auto naive = run_collapse_battery(20, 100, BatteryConfig::kNaive);
  const auto jump = run_collapse_battery(20, 100, BatteryConfig::kJumpMargin);
  CHECK(naive.bad_debt_count > 0);
  CHECK(jump.bad_debt_count == 0);
  CHECK(naive.max_abs_residual <= 1e-9);
  CHECK(jump.max_abs_residual <= 1e-9);
}
