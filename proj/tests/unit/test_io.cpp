#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "evperp/config.hpp"
#include "evperp/error.hpp"
#include "evperp/io.hpp"
#include "evperp/replay.hpp"
#include "evperp/report_io.hpp"
#include "evperp/synthetic.hpp"
#include "evperp/taxonomy.hpp"

using namespace evperp;
namespace fs = std::filesystem;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIoFailure;
}

std::map<LegId, LegSeries> ticks(const std::string& text, const std::string& source = "ticks") {
  std::istringstream in(text);
  return parse_leg_series(in, source);
}

std::map<LegId, ResolutionRecord> resolutions(const std::string& text) {
  std::istringstream in(text);
  return parse_resolutions(in);
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("evperp_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::vector<std::string>> read_fixture_csv(const std::string& name) {
  std::ifstream in(fs::path(EVPERP_FIXTURE_DIR) / name);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split_csv_line(line));
  }
  return rows;
}

}  // namespace

TEST_CASE("tick loader accepts the minimal two-column file") {
  const auto legs = ticks("t_ms,mid\n0,0.4\n1000,0.45\n", "event");
  REQUIRE(legs.size() == 1);
  const auto& leg = legs.at("event");
  REQUIRE(leg.points.size() == 2);
  CHECK(leg.points[1].time == 1000);
  CHECK(leg.points[1].value == 0.45);
  CHECK_FALSE(leg.half_spread.has_value());
}

TEST_CASE("tick loader rejections") {
  CHECK(code_of([] { ticks("t_ms,mid\n0,1.2\n"); }) == ErrorCode::kBoundViolation);
  CHECK(code_of([] { ticks("t_ms,mid\n1000,0.4\n0,0.5\n"); }) == ErrorCode::kSchemaMismatch);
  CHECK(code_of([] { ticks("t_ms,mid\n0,0.4\n0,0.5\n"); }) == ErrorCode::kSchemaMismatch);
  CHECK(code_of([] { ticks("t_ms,price\n0,0.4\n"); }) == ErrorCode::kSchemaMismatch);
  CHECK(code_of([] { ticks("t_ms\n0\n"); }) == ErrorCode::kSchemaMismatch);
  CHECK(code_of([] { ticks("t_ms,mid\n0,abc\n"); }) == ErrorCode::kSchemaMismatch);
  CHECK(code_of([] { ticks("t_ms,mid,volume\n0,0.4,1\n1,0.4,\n"); }) == ErrorCode::kSchemaMismatch);
  CHECK(code_of([] { ticks("t_ms,mid,volume\n0,0.4,\n1,0.4,2\n"); }) == ErrorCode::kSchemaMismatch);
}

TEST_CASE("tick loader: multi-leg files and microstructure columns") {
  const auto legs = ticks("leg_id,t_ms,mid,bid,ask,volume\na,0,0.5,0.48,0.52,10\nb,0,0.3,0.29,0.31,5\na,60,0.51,0.5,0.52,2\n");
  REQUIRE(legs.size() == 2);
  const auto& a = legs.at("a");
  REQUIRE(a.half_spread.has_value());
  CHECK((*a.half_spread)[0] == doctest::Approx(0.02));
  CHECK((*a.volume)[1] == 2.0);
  CHECK(legs.at("b").points.size() == 1);
  const auto blank = ticks("leg_id,t_ms,mid,volume\na,0,0.5,3\nb,0,0.3,\n");
  CHECK(blank.at("a").volume.has_value());
  CHECK_FALSE(blank.at("b").volume.has_value());
}

TEST_CASE("resolution loader") {
  const auto r = resolutions("leg_id,tau_ms,outcome\na,1000,1\nb,2000,0\n");
  CHECK(r.at("a") == ResolutionRecord{1000, 1});
  CHECK(r.at("b") == ResolutionRecord{2000, 0});
  CHECK(code_of([] { resolutions("leg_id,tau_ms,outcome\na,1000,0.5\n"); }) == ErrorCode::kOutcomeNotBinary);
  CHECK(code_of([] { resolutions("leg_id,tau_ms,outcome\na,1000,1\na,1000,1\n"); }) == ErrorCode::kDuplicateLeg);
  CHECK(code_of([] { resolutions("tau_ms,leg_id,outcome\na,1000,1\n"); }) == ErrorCode::kSchemaMismatch);
}

TEST_CASE("market data round-trips through a directory") {
  auto g = generate_negrisk_group(3, 3, 20 * kHourMs, kHourMs);
  g.legs[0].volume = std::vector<double>(g.legs[0].points.size(), 1.5);
  g.legs[0].half_spread = std::vector<double>(g.legs[0].points.size(), 0.01);
  const auto data = to_market_data(g.legs, {g.group});
  const auto dir = scratch("market");
  write_market_data(dir, data);
  const auto back = load_market_data(dir);
  REQUIRE(back.legs.size() == data.legs.size());
  for (const auto& [id, leg] : data.legs) {
    INFO(id);
    const auto& b = back.legs.at(id);
    CHECK(b.points == leg.points);
    CHECK(b.resolution == leg.resolution);
    CHECK(b.volume == leg.volume);
    CHECK(b.half_spread == leg.half_spread);
    CHECK(b.depth_200bps == leg.depth_200bps);
  }
  CHECK(back.groups == data.groups);
  CHECK(code_of([] { load_market_data(fs::temp_directory_path() / "evperp_does_not_exist"); }) == ErrorCode::kIoFailure);
}

TEST_CASE("order loader") {
  std::istringstream in("t_ms,trader_id,side,notional,leverage\n0,u,long,100,2\n10,v,short,5,1\n");
  const auto o = parse_orders(in);
  REQUIRE(o.size() == 2);
  CHECK(o[0] == TraderOrder{0, "u", Side::kLong, 100, 2});
  CHECK(o[1].side == Side::kShort);
}

TEST_CASE("csv helpers") {
  CHECK(split_csv_line("a,\"b,c\",d") == std::vector<std::string>{"a", "b,c", "d"});
  CHECK(join_csv({"x", "y,z"}) == "x,\"y,z\"");
  std::mt19937_64 rng{5};
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) / (1 + static_cast<double>(i));
    CHECK(parse_double(format_double(x), "x") == x);
  }
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

std::vector<RunConfig> sample_configs() {
  std::vector<RunConfig> out;
  RunConfig base;
  base.replay.grid_ms = 30000;
  base.replay.seed = 77;
  base.replay.risk.margin.jump_coeff = 0.8;
  base.replay.risk.margin.aggregation = JumpAggregation::kMax;
  base.replay.risk.funding.correction = FundingCorrection::kVarianceFloor;
  base.replay.risk.funding.clip_lo = -0.02;
  base.replay.risk.leverage.floor = 1.5;
  base.replay.risk.liquidation_slippage = 0.003;
  base.replay.halt.resolution_zone_ms = 3 * kHourMs;
  base.replay.halt_enabled = false;
  base.replay.granularity = ReportGranularity::kSummary;
  base.replay.basis.volatility = 0.02;
  base.replay.population.traders = 4;

  ConditionalSpec c;
  c.leg_a = "a";
  c.leg_b = "b";
  c.joint_leg = "ab";
  c.denom_floor = 0.02;
  c.floor_action = FloorAction::kHalt;
  c.termination.kind = TerminationRule::Kind::kTwap;
  c.termination.twap_window_ms = 5 * kHourMs;
  c.ordering = OrderingRule::kSettleAtA;
  BasketSpec b;
  b.legs = {"x", "y", "z"};
  b.weight_rule.kind = WeightRule::Kind::kStatic;
  b.weight_rule.weights = {0.5, 0.25, 0.25};
  b.rebalance = RebalanceRule::kDropOnResolution;
  b.halt_policy = BasketHaltPolicy::kSingleMaturity;
  VarianceSpec v;
  v.leg = "a";
  v.estimator = VarianceEstimator::kIncrements;
  v.normalization = VarianceNormalization::kNone;
  LiquiditySpec l;
  l.measure = LiquidityMeasure::kDepth;
  l.member_legs = {"a", "b"};
  l.depth_aggregation = CrossMemberAggregation::kMedian;
  RollingSpec r;
  r.constituents = {"m1", "m2", "m3"};
  r.mechanism.kind = RollMechanism::Kind::kVolumeWeighted;
  r.mechanism.volume_target = 250;
  r.basis_rule = RollBasisRule::kCashSettle;
  FundingOnlySpec h;
  h.target.kind = FundingTargetSpec::Kind::kDivergence;
  h.target.leg_a = "a";
  h.target.leg_b = "b";
  h.cadence.kind = SettlementCadence::Kind::kPeriodic;
  h.cadence.interval_ms = kHourMs;
  for (VariantSpec s : std::vector<VariantSpec>{c, SpreadSpec{"a", "b", 5000}, b, v, EntropySpec{"e"}, l, r, h}) {
    RunConfig rc = base;
    rc.spec = s;
    out.push_back(rc);
    RunConfig defaults;
    defaults.spec = s;
    out.push_back(defaults);
  }
  return out;
}

}  // namespace

TEST_CASE("config round-trips for every variant") {
  for (const auto& rc : sample_configs()) {
    const auto text = serialize_run_config(rc);
    INFO(text);
    CHECK(parse_run_config(text) == rc);
  }
}

TEST_CASE("config errors") {
  CHECK(code_of([] { parse_run_config("variant = spread\nspread.leg_a = a\nspread.leg_b = b\nbogus = 1\n"); }) ==
        ErrorCode::kUnknownConfigKey);
  CHECK(code_of([] { parse_run_config("variant = spread\nspread.leg_a = a\nspread.leg_b = b\nvariance.window_ms = 10\n"); }) ==
        ErrorCode::kUnknownConfigKey);
  CHECK(code_of([] { parse_run_config("spread.leg_a = a\n"); }) == ErrorCode::kConfigValue);
  CHECK(code_of([] { parse_run_config("variant = spread\nspread.leg_a = a\nspread.leg_a = b\n"); }) == ErrorCode::kConfigValue);
  CHECK(code_of([] { parse_run_config("variant = entropy\nentropy.leg = a\nreplay.grid_ms = soon\n"); }) ==
        ErrorCode::kConfigValue);
  const auto rc = parse_run_config("# comment\nvariant = entropy\n\n  entropy.leg = a  \n");
  CHECK(std::get<EntropySpec>(rc.spec).leg == "a");
}

TEST_CASE("config reference covers every serialized key") {
  std::set<std::string> documented;
  for (const auto& d : config_reference()) documented.insert(d.key);
  for (const auto& rc : sample_configs()) {
    for (const auto& e : parse_config_entries(serialize_run_config(rc))) {
      INFO(e.key);
      CHECK(documented.count(e.key) == 1);
    }
  }
  CHECK(config_reference_markdown().find("| key |") != std::string::npos);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

std::vector<ReplayReport> sample_reports() {
  std::vector<ReplayReport> out;
  auto g = generate_negrisk_group(4, 3, 60 * kHourMs, kHourMs);
  for (auto& l : g.legs) l.half_spread = std::vector<double>(l.points.size(), 0.01);
  const auto data = to_market_data(g.legs, {g.group});
  ReplayConfig rc;
  rc.grid_ms = kHourMs;
  rc.seed = 9;
  rc.population.traders = 6;
  rc.population.orders_per_trader = 3;
  rc.population.leverage = 4;
  rc.risk.leverage.floor = 4;
  rc.halt.resolution_zone_ms = 4 * kHourMs;
  rc.basis.volatility = 0.01;
  ConditionalSpec c;
  c.leg_a = g.legs[0].leg_id;
  c.leg_b = g.legs[1].leg_id;
  c.floor_action = FloorAction::kHalt;
  c.denom_floor = 0.3;
  BasketSpec b;
  for (const auto& l : g.legs) b.legs.push_back(l.leg_id);
  b.rebalance = RebalanceRule::kDropOnResolution;
  RollingSpec r;
  r.constituents = {g.legs[0].leg_id, g.legs[1].leg_id};
  FundingOnlySpec h;
  h.target.leg_a = g.legs[0].leg_id;
  LiquiditySpec l;
  l.member_legs = b.legs;
  for (VariantSpec s : std::vector<VariantSpec>{c, b, h, l}) out.push_back(replay(s, data, rc));
  ReplayReport failed;
  failed.variant = "spread";
  failed.complete = false;
  failed.error = "MissingLeg [leg_b]: x, \"quoted\"";
  out.push_back(failed);
  out.push_back(ReplayReport{});
  return out;
}

}  // namespace

TEST_CASE("reports round-trip through jsonl and csv-bundle") {
  int i = 0;
  for (const auto& rep : sample_reports()) {
    INFO("report " << i << " " << rep.variant);
    CHECK(report_from_jsonl(report_to_jsonl(rep)) == rep);
    for (auto fmt : {ReportFormat::kJsonl, ReportFormat::kCsvBundle}) {
      const auto dir = scratch("report_" + std::to_string(i) + std::string{to_string(fmt)});
      emit_report(rep, fmt, dir);
      CHECK(parse_report(fmt, dir) == rep);
    }
    ++i;
  }
}

TEST_CASE("csv-bundle of an empty report still writes headers") {
  const auto dir = scratch("empty_bundle");
  emit_report(ReplayReport{}, ReportFormat::kCsvBundle, dir);
  for (const char* f : {"ticks.csv", "funding.csv", "liquidations.csv", "orders.csv", "halts.csv", "rolls.csv",
                        "discontinuities.csv", "settlements.csv"}) {
    INFO(f);
    const auto text = read_file(dir / f);
    CHECK_FALSE(text.empty());
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  }
}

TEST_CASE("settlement rule text passes through unchanged") {
  ReplayReport rep;
  rep.settlements.push_back({5, SettlementKind::kEarlyTermination, 0.25, LegId{"a"}, "twap, window=3600000"});
  rep.settlements.push_back({9, SettlementKind::kTerminal, 1.0, std::nullopt, "condition-met"});
  const auto dir = scratch("rule_text");
  emit_report(rep, ReportFormat::kCsvBundle, dir);
  const auto back = parse_report(ReportFormat::kCsvBundle, dir);
  CHECK(back.settlements == rep.settlements);
}

// ---------------------------------------------------------------------------
// Taxonomy
// ---------------------------------------------------------------------------

TEST_CASE("taxonomy tables match the checked-in transcription cell by cell") {
  CHECK(taxonomy_grid(TaxonomyTable::kInheritance) == read_fixture_csv("taxonomy_inheritance.csv"));
  CHECK(taxonomy_grid(TaxonomyTable::kEvaluability) == read_fixture_csv("taxonomy_evaluability.csv"));
}

TEST_CASE("taxonomy rendering matches the golden output") {
  CHECK(render_taxonomy(TaxonomyTable::kInheritance) ==
        read_file(fs::path(EVPERP_FIXTURE_DIR) / "taxonomy_inheritance.golden.txt"));
  CHECK(render_taxonomy(TaxonomyTable::kEvaluability) ==
        read_file(fs::path(EVPERP_FIXTURE_DIR) / "taxonomy_evaluability.golden.txt"));
}

TEST_CASE("taxonomy spot checks") {
  const auto& inh = inheritance_table();
  const auto collapse = std::find_if(inh.begin(), inh.end(),
                                     [](const auto& r) { return r.component == "Terminal collapse property"; });
  REQUIRE(collapse != inh.end());
  CHECK(collapse->cells[3].mark == Mark::kAbsent);  // E
  const auto oracle = std::find_if(inh.begin(), inh.end(),
                                   [](const auto& r) { return r.component == "Oracle-mediated resolution"; });
  REQUIRE(oracle != inh.end());
  CHECK(oracle->cells[0].text() == "✓‡");  // B
  const auto& ev = evaluability_table();
  const auto spread = std::find_if(ev.begin(), ev.end(), [](const auto& r) { return r.variant == 'C'; });
  REQUIRE(spread != ev.end());
  CHECK(spread->net == "Mostly evaluable");
  CHECK(spread->tier == "Near-term");
  CHECK(code_of([] { taxonomy_table_from_string("variants"); }) == ErrorCode::kConfigValue);
}
