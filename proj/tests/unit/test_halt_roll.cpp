#include <doctest.h>

#include <random>

#include "../support/builders.hpp"
#include "evperp/error.hpp"
#include "evperp/halt_roll.hpp"

using namespace evperp;
using doctest::Approx;

namespace {

MarketData two_legs(TimeMs tau_a, TimeMs tau_b) {
  return build::data({build::leg("A", {{0, 0.5}}, ResolutionRecord{tau_a, 1}),
                      build::leg("B", {{0, 0.5}}, ResolutionRecord{tau_b, 0})});
}

Position long_at(double entry, double notional = 100) {
  Position p;
  p.trader_id = "t";
  p.side = Side::kLong;
  p.notional = notional;
  p.entry_price = entry;
  p.margin_posted = 10;
  return p;
}

double wealth(const std::vector<Position>& ps, double mark, double cash) {
  double w = cash;
  for (const auto& p : ps) w += p.unrealized_pnl(mark);
  return w;
}

}  // namespace

TEST_CASE("spread windows: disjoint and merged") {
  HaltConfig cfg;
  cfg.resolution_zone_ms = 24 * kHourMs;
  const auto apart = halt_windows(SpreadSpec{"A", "B"}, two_legs(1000 * kHourMs, 2000 * kHourMs), cfg);
  CHECK(apart.size() == 2);
  const auto close = halt_windows(SpreadSpec{"A", "B"}, two_legs(1000 * kHourMs, 1010 * kHourMs), cfg);
  REQUIRE(close.size() == 1);
  CHECK(close[0].start == 976 * kHourMs);
  CHECK(close[0].end == 1010 * kHourMs);
}

TEST_CASE("windows for variants without scheduled resolution") {
  const auto data = two_legs(100 * kHourMs, 200 * kHourMs);
  VarianceSpec v;
  v.leg = "A";
  CHECK(halt_windows(v, data, {}).empty());
  CHECK(halt_windows(EntropySpec{"A"}, data, {}).empty());
  LiquiditySpec l;
  l.member_legs = {"A"};
  CHECK(halt_windows(l, data, {}).empty());
  FundingOnlySpec h;
  h.target.leg_a = "A";
  CHECK(halt_windows(h, data, {}).empty());
}

TEST_CASE("conditional window sits on the closer resolution") {
  ConditionalSpec c;
  c.leg_a = "A";
  c.leg_b = "B";
  c.joint_leg = "A";
  const auto w = halt_windows(c, two_legs(500 * kHourMs, 300 * kHourMs), {});
  REQUIRE_FALSE(w.empty());
  CHECK(w.front().end == 300 * kHourMs);
  CHECK(w.front().start == 300 * kHourMs - kDefaultResolutionZoneMs);
}

TEST_CASE("basket halt policies") {
  auto data = two_legs(100 * kHourMs, 300 * kHourMs);
  BasketSpec b;
  b.legs = {"A", "B"};
  b.halt_policy = BasketHaltPolicy::kClosestLeg;
  auto w = halt_windows(b, data, {});
  REQUIRE(w.size() == 1);
  CHECK(w[0].end == 100 * kHourMs);
  b.halt_policy = BasketHaltPolicy::kSingleMaturity;
  w = halt_windows(b, data, {});
  REQUIRE(w.size() == 1);
  CHECK(w[0].end == 300 * kHourMs);
}

TEST_CASE("settle-lag stage and zone validation") {
  HaltConfig cfg;
  cfg.settle_lag_ms = kHourMs;
  const auto w = halt_windows(SpreadSpec{"A", "B"}, two_legs(1000 * kHourMs, 2000 * kHourMs), cfg);
  for (const auto& x : w) CHECK(x.end <= 2000 * kHourMs + kHourMs);
  cfg.resolution_zone_ms = 0;
  CHECK_THROWS_AS(halt_windows(SpreadSpec{"A", "B"}, two_legs(10, 20), cfg), Error);
}

TEST_CASE("merged windows are sorted and disjoint") {
  std::mt19937_64 rng{31};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<HaltWindow> ws;
    for (int i = 0; i < 12; ++i) {
      const TimeMs s = static_cast<TimeMs>(rng() % 1000);
      ws.push_back({s, s + 1 + static_cast<TimeMs>(rng() % 100), "x", HaltStage::kPreResolution});
    }
    const auto m = merge_windows(ws);
    for (std::size_t i = 0; i < m.size(); ++i) {
      CHECK(m[i].start < m[i].end);
      if (i > 0) CHECK(m[i - 1].end < m[i].start);
    }
    for (const auto& w : ws) {
      for (TimeMs t = w.start; t < w.end; t += 7) CHECK(in_any_window(m, t));
    }
  }
}

TEST_CASE("enforce_halt rejects only orders inside windows") {
  const std::vector<HaltWindow> ws{{1000, 2000, "A", HaltStage::kPreResolution}};
  CHECK_FALSE(enforce_halt(ws, TraderOrder{1500, "u", Side::kLong, 1, 1}).accepted);
  CHECK(enforce_halt(ws, TraderOrder{999, "u", Side::kLong, 1, 1}).accepted);
  CHECK(enforce_halt(ws, TraderOrder{2000, "u", Side::kLong, 1, 1}).accepted);
  CHECK(enforce_halt(ws, ResolutionEvent{"A", {1500, 1}}).accepted);
  CHECK(enforce_halt(ws, PriceUpdate{"A", {1500, 0.4}, {}}).accepted);
}

TEST_CASE("roll weights") {
  RollPlan lin;
  lin.mechanism.kind = RollMechanism::Kind::kLinear;
  lin.start = 1000;
  lin.end = 3000;
  CHECK(roll_weight(lin, 2000) == 0.5);
  CHECK(roll_weight(lin, 0) == 0.0);
  CHECK(roll_weight(lin, 5000) == 1.0);

  RollPlan cliff;
  cliff.mechanism.kind = RollMechanism::Kind::kCliff;
  cliff.start = cliff.end = 1000;
  CHECK(roll_weight(cliff, 999) == 0.0);
  CHECK(roll_weight(cliff, 1000) == 1.0);

  RollPlan vol;
  vol.mechanism.kind = RollMechanism::Kind::kVolumeWeighted;
  vol.mechanism.volume_target = 1000;
  vol.start = 0;
  vol.end = 100000;
  CHECK(roll_weight(vol, 10, 300.0) == Approx(0.3));
  CHECK(roll_weight(vol, 10, 3000.0) == 1.0);
  CHECK_THROWS_AS(roll_weight(vol, 10), Error);
}

TEST_CASE("rolled index endpoints and convex combination") {
  CHECK(rolled_index(0.6, 0.4, 0.0) == 0.6);
  CHECK(rolled_index(0.6, 0.4, 1.0) == 0.4);
  CHECK(rolled_index(0.6, 0.4, 0.25) == Approx(0.55));
}

TEST_CASE("linear roll is continuous at its endpoints") {
  RollPlan lin;
  lin.mechanism.kind = RollMechanism::Kind::kLinear;
  lin.start = 10000;
  lin.end = 20000;
  const double a = 0.63, b = 0.41;
  const double left_start = rolled_index(a, b, roll_weight(lin, lin.start - 1));
  const double at_start = rolled_index(a, b, roll_weight(lin, lin.start));
  CHECK(std::abs(left_start - at_start) <= 1e-12);
  const double at_end = rolled_index(a, b, roll_weight(lin, lin.end));
  const double right_end = rolled_index(a, b, roll_weight(lin, lin.end + 1));
  CHECK(std::abs(at_end - right_end) <= 1e-12);
  const double near_end = rolled_index(a, b, roll_weight(lin, lin.end - 1));
  CHECK(std::abs(near_end - at_end) <= std::abs(a - b) / 10000 + 1e-12);
}

TEST_CASE("roll basis rules") {
  SUBCASE("zero basis is a no-op for every rule") {
    for (auto rule : {RollBasisRule::kReAnchor, RollBasisRule::kMaintainNotional, RollBasisRule::kCashSettle}) {
      std::vector<Position> ps{long_at(0.5)};
      const auto before = ps;
      const auto adj = apply_roll_basis(ps, 0.6, 0.6, rule);
      CHECK(ps == before);
      CHECK(adj.cash[0] == 0.0);
      CHECK(adj.realized_basis[0] == 0.0);
    }
  }
  SUBCASE("maintain-notional books the basis, no cash") {
    std::vector<Position> ps{long_at(0.6)};
    const auto adj = apply_roll_basis(ps, 0.6, 0.5, RollBasisRule::kMaintainNotional);
    CHECK(adj.realized_basis[0] == Approx(100 * (0.5 - 0.6)));
    CHECK(adj.cash[0] == 0.0);
    CHECK(ps[0].entry_price == 0.6);
  }
  SUBCASE("cash-settle pays the basis and resets entry") {
    std::vector<Position> ps{long_at(0.6)};
    const auto adj = apply_roll_basis(ps, 0.6, 0.5, RollBasisRule::kCashSettle);
    CHECK(adj.cash[0] == Approx(-10));
    CHECK(ps[0].entry_price == Approx(0.5));
  }
  SUBCASE("re-anchor preserves unrealized pnl") {
    std::mt19937_64 rng{41};
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int i = 0; i < 1000; ++i) {
      std::vector<Position> ps{long_at(u(rng), 50 + 100 * u(rng)), long_at(u(rng), 10)};
      ps[1].side = Side::kShort;
      const double before = u(rng), after = u(rng);
      double pnl_before = 0, pnl_after = 0;
      for (const auto& p : ps) pnl_before += p.unrealized_pnl(before);
      const auto adj = apply_roll_basis(ps, before, after, RollBasisRule::kReAnchor);
      for (const auto& p : ps) pnl_after += p.unrealized_pnl(after);
      CHECK(std::abs(pnl_after - pnl_before) <= 1e-12);
      CHECK(adj.cash[0] == 0.0);
    }
    std::vector<Position> ps{long_at(0.5)};
    CHECK_THROWS_AS(apply_roll_basis(ps, 0.0, 0.5, RollBasisRule::kReAnchor), Error);
    std::vector<Position> none;
    CHECK_NOTHROW(apply_roll_basis(none, 0.0, 0.5, RollBasisRule::kReAnchor));
  }
  SUBCASE("cash-settle and maintain-notional leave equal wealth") {
    std::mt19937_64 rng{43};
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int i = 0; i < 1000; ++i) {
      const double entry = u(rng), before = u(rng), after = u(rng);
      std::vector<Position> cs{long_at(entry)}, mn{long_at(entry)};
      const auto c = apply_roll_basis(cs, before, after, RollBasisRule::kCashSettle);
      const auto m = apply_roll_basis(mn, before, after, RollBasisRule::kMaintainNotional);
      // maintain-notional keeps entry and marks against the new index;
      // cash-settle pays the move and re-marks entry, same total wealth
      CHECK(std::abs(wealth(cs, after, c.cash[0]) - wealth(mn, after, 0.0)) <= 1e-12);
      // the cash paid equals the basis the other rule books
      CHECK(c.cash[0] == Approx(m.realized_basis[0]).epsilon(1e-12));
    }
  }
}

TEST_CASE("schedule_roll: cliff and linear boundaries") {
  const std::vector<LegId> cs{"c0", "c1"};
  const TimeMs tau0 = 30 * kDayMs;
  const std::vector<TimeMs> taus{tau0, 60 * kDayMs};
  const TimeMs zone = kDayMs;

  RollMechanism cliff;
  cliff.kind = RollMechanism::Kind::kCliff;
  cliff.cliff_lead_ms = 2 * zone;
  auto s = schedule_roll(cs, taus, zone, cliff);
  REQUIRE(s.plans.size() == 1);
  CHECK(s.warnings.empty());
  CHECK_FALSE(s.plans[0].overlaps_zone);

  cliff.cliff_lead_ms = zone / 2;
  s = schedule_roll(cs, taus, zone, cliff);
  CHECK(s.plans[0].overlaps_zone);
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].code == ErrorCode::kRollOverlapsResolutionZone);

  RollMechanism lin;
  lin.kind = RollMechanism::Kind::kLinear;
  lin.start_lead_ms = 3 * zone;
  lin.end_lead_ms = zone;
  s = schedule_roll(cs, taus, zone, lin);
  CHECK(s.plans[0].end == tau0 - zone);
  CHECK_FALSE(s.plans[0].overlaps_zone);
  CHECK(s.warnings.empty());
}
