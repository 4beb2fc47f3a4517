#include "evperp/config.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "evperp/error.hpp"
#include "evperp/io.hpp"

namespace evperp {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Codecs turn one field into text and back. format() returns nullopt for an
// unset optional, which serialize skips.

struct DoubleCodec {
  static constexpr const char* type = "float";
  double parse(std::string_view v, const std::string& key) const {
    try {
      return parse_double(v, key);
    } catch (const Error&) {
      throw Error(ErrorCode::kConfigValue, key, "expected a number, got '" + std::string{v} + "'");
    }
  }
  std::optional<std::string> format(double x) const { return format_double(x); }
};

template <typename Int>
struct IntCodec {
  static constexpr const char* type = "integer";
  Int parse(std::string_view v, const std::string& key) const {
    std::int64_t x = 0;
    try {
      x = parse_int(v, key);
    } catch (const Error&) {
      throw Error(ErrorCode::kConfigValue, key, "expected an integer, got '" + std::string{v} + "'");
    }
    if constexpr (std::is_unsigned_v<Int>) {
      if (x < 0) throw Error(ErrorCode::kConfigValue, key, "must be non-negative");
    }
    return static_cast<Int>(x);
  }
  std::optional<std::string> format(Int x) const { return std::to_string(x); }
};

struct BoolCodec {
  static constexpr const char* type = "bool";
  bool parse(std::string_view v, const std::string& key) const {
    if (v == "true") return true;
    if (v == "false") return false;
    throw Error(ErrorCode::kConfigValue, key, "expected true or false");
  }
  std::optional<std::string> format(bool x) const { return std::string{x ? "true" : "false"}; }
};

struct StringCodec {
  static constexpr const char* type = "leg id";
  std::string parse(std::string_view v, const std::string&) const { return std::string{v}; }
  std::optional<std::string> format(const std::string& x) const { return x; }
};

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  if (trim(v).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = v.find(',', pos);
    out.push_back(trim(v.substr(pos, comma == std::string_view::npos ? v.npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

struct StringListCodec {
  static constexpr const char* type = "list of leg ids";
  std::vector<std::string> parse(std::string_view v, const std::string& key) const {
    std::vector<std::string> out;
    for (auto item : split_list(v)) {
      if (item.empty()) throw Error(ErrorCode::kConfigValue, key, "empty list item");
      out.emplace_back(item);
    }
    return out;
  }
  std::optional<std::string> format(const std::vector<std::string>& xs) const {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + xs[i];
    return out;
  }
};

struct DoubleListCodec {
  static constexpr const char* type = "list of floats";
  std::vector<double> parse(std::string_view v, const std::string& key) const {
    std::vector<double> out;
    for (auto item : split_list(v)) out.push_back(DoubleCodec{}.parse(item, key));
    return out;
  }
  std::optional<std::string> format(const std::vector<double>& xs) const {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_double(xs[i]);
    return out;
  }
};

template <typename E>
struct EnumCodec {
  std::vector<std::pair<E, std::string_view>> names;
  std::string type;

  EnumCodec(std::initializer_list<std::pair<E, std::string_view>> list) : names(list) {
    type = "one of ";
    for (std::size_t i = 0; i < names.size(); ++i) type += (i ? "|" : "") + std::string{names[i].second};
  }
  E parse(std::string_view v, const std::string& key) const {
    for (const auto& [e, n] : names) {
      if (n == v) return e;
    }
    throw Error(ErrorCode::kConfigValue, key, "expected " + type + ", got '" + std::string{v} + "'");
  }
  std::optional<std::string> format(E e) const {
    for (const auto& [x, n] : names) {
      if (x == e) return std::string{n};
    }
    return std::nullopt;
  }
};

template <typename Inner>
struct OptionalCodec {
  Inner inner;
  using T = decltype(inner.parse(std::string_view{}, std::string{}));
  std::optional<T> parse(std::string_view v, const std::string& key) const { return inner.parse(v, key); }
  std::optional<std::string> format(const std::optional<T>& x) const {
    if (!x) return std::nullopt;
    return inner.format(*x);
  }
};

template <typename C>
std::string type_name(const C& codec) {
  if constexpr (requires { codec.inner; }) {
    return type_name(codec.inner) + " (optional)";
  } else if constexpr (requires { codec.names; }) {
    return codec.type;
  } else {
    return C::type;
  }
}

struct KeyDef {
  std::string key;
  std::optional<VariantKind> owner;
  std::string type;
  std::string unit;
  std::string binds;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

template <typename Access, typename Codec>
KeyDef key(std::string name, std::optional<VariantKind> owner, std::string unit, std::string binds, Access access,
           Codec codec) {
  KeyDef def;
  def.key = name;
  def.owner = owner;
  def.type = type_name(codec);
  def.unit = std::move(unit);
  def.binds = std::move(binds);
  def.set = [access, codec, name](RunConfig& c, std::string_view v) { access(c) = codec.parse(v, name); };
  def.get = [access, codec](const RunConfig& c) { return codec.format(access(const_cast<RunConfig&>(c))); };
  return def;
}

template <typename S>
S& spec_of(RunConfig& c) {
  return std::get<S>(c.spec);
}

const EnumCodec<FloorAction> kFloorAction{{FloorAction::kClipToLast, "clip-to-last"}, {FloorAction::kHalt, "halt"}};
const EnumCodec<TerminationRule::Kind> kTermination{{TerminationRule::Kind::kLastTick, "last-tick"},
                                                    {TerminationRule::Kind::kFixed, "fixed"},
                                                    {TerminationRule::Kind::kTwap, "twap"}};
const EnumCodec<OrderingRule> kOrdering{{OrderingRule::kSettleAtA, "settle-at-A"},
                                        {OrderingRule::kJointAtB, "joint-at-B"}};
const EnumCodec<WeightRule::Kind> kWeightRule{{WeightRule::Kind::kStatic, "static"},
                                              {WeightRule::Kind::kEqual, "equal"},
                                              {WeightRule::Kind::kVolumeSnapshot, "volume-snapshot"}};
const EnumCodec<RebalanceRule> kRebalance{{RebalanceRule::kNone, "none"},
                                          {RebalanceRule::kDropOnResolution, "drop-on-resolution"}};
const EnumCodec<BasketHaltPolicy> kBasketHalt{{BasketHaltPolicy::kClosestLeg, "closest-leg"},
                                              {BasketHaltPolicy::kSingleMaturity, "single-maturity"}};
const EnumCodec<VarianceEstimator> kEstimator{{VarianceEstimator::kLevel, "level"},
                                              {VarianceEstimator::kIncrements, "increments"}};
const EnumCodec<VarianceNormalization> kNormalization{{VarianceNormalization::kNone, "none"},
                                                      {VarianceNormalization::kPerWindow, "per-window"}};
const EnumCodec<LiquidityMeasure> kMeasure{{LiquidityMeasure::kMedianHalfSpread, "median-half-spread"},
                                           {LiquidityMeasure::kDepth, "depth"},
                                           {LiquidityMeasure::kAmihud, "amihud"}};
const EnumCodec<CrossMemberAggregation> kCrossAgg{{CrossMemberAggregation::kMean, "mean"},
                                                  {CrossMemberAggregation::kMedian, "median"}};
const EnumCodec<RollMechanism::Kind> kMechanism{{RollMechanism::Kind::kCliff, "cliff"},
                                                {RollMechanism::Kind::kLinear, "linear"},
                                                {RollMechanism::Kind::kVolumeWeighted, "volume-weighted"}};
const EnumCodec<RollBasisRule> kBasisRule{{RollBasisRule::kReAnchor, "re-anchor"},
                                          {RollBasisRule::kMaintainNotional, "maintain-notional"},
                                          {RollBasisRule::kCashSettle, "cash-settle"}};
const EnumCodec<RollDeadlinePolicy> kDeadline{{RollDeadlinePolicy::kCompleteBeforeHalt, "complete-before-halt"}};
const EnumCodec<FundingTargetSpec::Kind> kTarget{{FundingTargetSpec::Kind::kBasis, "basis"},
                                                 {FundingTargetSpec::Kind::kDivergence, "divergence"},
                                                 {FundingTargetSpec::Kind::kDisagreement, "disagreement"}};
const EnumCodec<SettlementCadence::Kind> kCadence{{SettlementCadence::Kind::kContinuous, "continuous"},
                                                  {SettlementCadence::Kind::kPeriodic, "periodic"},
                                                  {SettlementCadence::Kind::kOnClose, "on-close"}};
const EnumCodec<JumpAggregation> kAggregation{{JumpAggregation::kMax, "max"}, {JumpAggregation::kSum, "sum"}};
const EnumCodec<FundingCorrection> kCorrection{{FundingCorrection::kPerLegMin, "per-leg-min"},
                                               {FundingCorrection::kVarianceFloor, "variance-floor"},
                                               {FundingCorrection::kNone, "none"}};
const EnumCodec<ReportGranularity> kGranularity{{ReportGranularity::kTick, "tick"},
                                                {ReportGranularity::kSummary, "summary"}};

std::vector<KeyDef> build_keys() {
  using VK = VariantKind;
  const DoubleCodec dbl;
  const IntCodec<TimeMs> ms;
  const StringCodec leg;
  std::vector<KeyDef> k;

  // conditional
  const auto C = VK::kConditional;
  k.push_back(key("conditional.leg_a", C, "", "numerator event A", [](RunConfig& c) -> auto& { return spec_of<ConditionalSpec>(c).leg_a; }, leg));
  k.push_back(key("conditional.leg_b", C, "", "conditioning event B", [](RunConfig& c) -> auto& { return spec_of<ConditionalSpec>(c).leg_b; }, leg));
  k.push_back(key("conditional.joint_leg", C, "", "joint market for A and B; unset means A and B share a negRisk group",
                  [](RunConfig& c) -> auto& { return spec_of<ConditionalSpec>(c).joint_leg; }, OptionalCodec<StringCodec>{}));
  k.push_back(key("conditional.denom_floor", C, "probability", "denominator floor below which the index is not computed",
                  [](RunConfig& c) -> auto& { return spec_of<ConditionalSpec>(c).denom_floor; }, dbl));
  k.push_back(key("conditional.floor_action", C, "", "behaviour under the floor: hold last value or halt",
                  [](RunConfig& c) -> auto& { return spec_of<ConditionalSpec>(c).floor_action; }, kFloorAction));
  k.push_back(key("conditional.termination", C, "", "early-termination value when the condition fails",
                  [](RunConfig& c) -> auto& { return spec_of<ConditionalSpec>(c).termination.kind; }, kTermination));
  k.push_back(key("conditional.termination.fixed_value", C, "probability", "value paid under the fixed rule",
                  [](RunConfig& c) -> auto& { return spec_of<ConditionalSpec>(c).termination.fixed_value; }, dbl));
  k.push_back(key("conditional.termination.twap_window_ms", C, "ms", "look-back of the twap rule",
                  [](RunConfig& c) -> auto& { return spec_of<ConditionalSpec>(c).termination.twap_window_ms; }, ms));
  k.push_back(key("conditional.ordering", C, "", "settlement when A resolves before B",
                  [](RunConfig& c) -> auto& { return spec_of<ConditionalSpec>(c).ordering; }, kOrdering));

  // spread
  const auto S = VK::kSpread;
  k.push_back(key("spread.leg_a", S, "", "long leg", [](RunConfig& c) -> auto& { return spec_of<SpreadSpec>(c).leg_a; }, leg));
  k.push_back(key("spread.leg_b", S, "", "short leg", [](RunConfig& c) -> auto& { return spec_of<SpreadSpec>(c).leg_b; }, leg));
  k.push_back(key("spread.simultaneous_within_ms", S, "ms", "resolution gap treated as one joint jump for margin",
                  [](RunConfig& c) -> auto& { return spec_of<SpreadSpec>(c).simultaneous_within_ms; }, ms));

  // basket
  const auto B = VK::kBasket;
  k.push_back(key("basket.legs", B, "", "member legs", [](RunConfig& c) -> auto& { return spec_of<BasketSpec>(c).legs; }, StringListCodec{}));
  k.push_back(key("basket.weight_rule", B, "", "how weights are fixed",
                  [](RunConfig& c) -> auto& { return spec_of<BasketSpec>(c).weight_rule.kind; }, kWeightRule));
  k.push_back(key("basket.weights", B, "", "static weights, summing to 1",
                  [](RunConfig& c) -> auto& { return spec_of<BasketSpec>(c).weight_rule.weights; }, DoubleListCodec{}));
  k.push_back(key("basket.snapshot_ms", B, "ms since epoch", "volume snapshot time for volume-snapshot weights",
                  [](RunConfig& c) -> auto& { return spec_of<BasketSpec>(c).weight_rule.snapshot_ms; }, ms));
  k.push_back(key("basket.rebalance", B, "", "keep original weights or drop resolved members",
                  [](RunConfig& c) -> auto& { return spec_of<BasketSpec>(c).rebalance; }, kRebalance));
  k.push_back(key("basket.halt_policy", B, "", "which member resolution opens the halt window",
                  [](RunConfig& c) -> auto& { return spec_of<BasketSpec>(c).halt_policy; }, kBasketHalt));

  // variance
  const auto V = VK::kVariance;
  k.push_back(key("variance.leg", V, "", "source leg", [](RunConfig& c) -> auto& { return spec_of<VarianceSpec>(c).leg; }, leg));
  k.push_back(key("variance.estimator", V, "", "level variance or increment variance",
                  [](RunConfig& c) -> auto& { return spec_of<VarianceSpec>(c).estimator; }, kEstimator));
  k.push_back(key("variance.window_ms", V, "ms", "trailing window length",
                  [](RunConfig& c) -> auto& { return spec_of<VarianceSpec>(c).window_ms; }, ms));
  k.push_back(key("variance.tick_ms", V, "ms", "sampling step inside the window",
                  [](RunConfig& c) -> auto& { return spec_of<VarianceSpec>(c).tick_ms; }, ms));
  k.push_back(key("variance.normalization", V, "", "increment sum left raw or divided by sample count",
                  [](RunConfig& c) -> auto& { return spec_of<VarianceSpec>(c).normalization; }, kNormalization));

  // entropy
  k.push_back(key("entropy.leg", VK::kEntropy, "", "source leg", [](RunConfig& c) -> auto& { return spec_of<EntropySpec>(c).leg; }, leg));

  // liquidity
  const auto L = VK::kLiquidity;
  k.push_back(key("liquidity.measure", L, "", "liquidity measure",
                  [](RunConfig& c) -> auto& { return spec_of<LiquiditySpec>(c).measure; }, kMeasure));
  k.push_back(key("liquidity.members", L, "", "member legs",
                  [](RunConfig& c) -> auto& { return spec_of<LiquiditySpec>(c).member_legs; }, StringListCodec{}));
  k.push_back(key("liquidity.depth_aggregation", L, "", "cross-member aggregation",
                  [](RunConfig& c) -> auto& { return spec_of<LiquiditySpec>(c).depth_aggregation; }, kCrossAgg));
  k.push_back(key("liquidity.amihud_floor", L, "notional", "volume floor in the Amihud ratio",
                  [](RunConfig& c) -> auto& { return spec_of<LiquiditySpec>(c).amihud_floor; }, dbl));

  // rolling
  const auto R = VK::kRolling;
  k.push_back(key("rolling.constituents", R, "", "constituent legs in resolution order",
                  [](RunConfig& c) -> auto& { return spec_of<RollingSpec>(c).constituents; }, StringListCodec{}));
  k.push_back(key("rolling.mechanism", R, "", "roll schedule shape",
                  [](RunConfig& c) -> auto& { return spec_of<RollingSpec>(c).mechanism.kind; }, kMechanism));
  k.push_back(key("rolling.cliff_lead_ms", R, "ms before tau", "cliff roll time",
                  [](RunConfig& c) -> auto& { return spec_of<RollingSpec>(c).mechanism.cliff_lead_ms; }, ms));
  k.push_back(key("rolling.start_lead_ms", R, "ms before tau", "linear and volume-weighted roll start",
                  [](RunConfig& c) -> auto& { return spec_of<RollingSpec>(c).mechanism.start_lead_ms; }, ms));
  k.push_back(key("rolling.end_lead_ms", R, "ms before tau", "linear roll end",
                  [](RunConfig& c) -> auto& { return spec_of<RollingSpec>(c).mechanism.end_lead_ms; }, ms));
  k.push_back(key("rolling.volume_target", R, "notional", "successor volume that completes a volume-weighted roll",
                  [](RunConfig& c) -> auto& { return spec_of<RollingSpec>(c).mechanism.volume_target; }, dbl));
  k.push_back(key("rolling.basis_rule", R, "", "treatment of the roll basis in open positions",
                  [](RunConfig& c) -> auto& { return spec_of<RollingSpec>(c).basis_rule; }, kBasisRule));
  k.push_back(key("rolling.deadline_policy", R, "", "rolls finish before the resolution zone",
                  [](RunConfig& c) -> auto& { return spec_of<RollingSpec>(c).deadline_policy; }, kDeadline));

  // funding-only
  const auto H = VK::kFundingOnly;
  k.push_back(key("funding_only.target", H, "", "quantity the funding rate pushes against",
                  [](RunConfig& c) -> auto& { return spec_of<FundingOnlySpec>(c).target.kind; }, kTarget));
  k.push_back(key("funding_only.leg_a", H, "", "target leg",
                  [](RunConfig& c) -> auto& { return spec_of<FundingOnlySpec>(c).target.leg_a; }, leg));
  k.push_back(key("funding_only.leg_b", H, "", "second leg for divergence",
                  [](RunConfig& c) -> auto& { return spec_of<FundingOnlySpec>(c).target.leg_b; }, leg));
  k.push_back(key("funding_only.clip_lo", H, "per interval", "lower rate clip",
                  [](RunConfig& c) -> auto& { return spec_of<FundingOnlySpec>(c).clip_lo; }, dbl));
  k.push_back(key("funding_only.clip_hi", H, "per interval", "upper rate clip",
                  [](RunConfig& c) -> auto& { return spec_of<FundingOnlySpec>(c).clip_hi; }, dbl));
  k.push_back(key("funding_only.cadence", H, "", "when accrued funding is paid",
                  [](RunConfig& c) -> auto& { return spec_of<FundingOnlySpec>(c).cadence.kind; }, kCadence));
  k.push_back(key("funding_only.cadence_interval_ms", H, "ms", "payment interval of the periodic cadence",
                  [](RunConfig& c) -> auto& { return spec_of<FundingOnlySpec>(c).cadence.interval_ms; }, ms));

  // risk
  const std::optional<VariantKind> any;
  k.push_back(key("margin.base_rate", any, "fraction of notional", "base maintenance rate m0",
                  [](RunConfig& c) -> auto& { return c.replay.risk.margin.base_rate; }, dbl));
  k.push_back(key("margin.jump_coeff", any, "", "jump term coefficient m_J; 0 disables jump-aware margin",
                  [](RunConfig& c) -> auto& { return c.replay.risk.margin.jump_coeff; }, dbl));
  k.push_back(key("margin.proximity_horizon_ms", any, "ms", "time to resolution at which the jump term is fully active",
                  [](RunConfig& c) -> auto& { return c.replay.risk.margin.proximity_horizon_ms; }, ms));
  k.push_back(key("margin.aggregation", any, "", "multi-leg jump aggregation",
                  [](RunConfig& c) -> auto& { return c.replay.risk.margin.aggregation; }, kAggregation));
  k.push_back(key("funding.sensitivity", any, "", "kappa in the funding rate",
                  [](RunConfig& c) -> auto& { return c.replay.risk.funding.sensitivity; }, dbl));
  k.push_back(key("funding.correction", any, "", "boundary correction; unset uses the variant default",
                  [](RunConfig& c) -> auto& { return c.replay.risk.funding.correction; }, OptionalCodec<EnumCodec<FundingCorrection>>{kCorrection}));
  k.push_back(key("funding.epsilon", any, "", "epsilon of the variance-floor correction",
                  [](RunConfig& c) -> auto& { return c.replay.risk.funding.epsilon; }, dbl));
  k.push_back(key("funding.clip_lo", any, "per interval", "lower rate clip",
                  [](RunConfig& c) -> auto& { return c.replay.risk.funding.clip_lo; }, dbl));
  k.push_back(key("funding.clip_hi", any, "per interval", "upper rate clip",
                  [](RunConfig& c) -> auto& { return c.replay.risk.funding.clip_hi; }, dbl));
  k.push_back(key("funding.interval_ms", any, "ms", "funding tick spacing",
                  [](RunConfig& c) -> auto& { return c.replay.risk.funding.interval_ms; }, ms));
  k.push_back(key("leverage.base", any, "x", "leverage cap far from resolution",
                  [](RunConfig& c) -> auto& { return c.replay.risk.leverage.base; }, dbl));
  k.push_back(key("leverage.floor", any, "x", "leverage cap inside the resolution zone",
                  [](RunConfig& c) -> auto& { return c.replay.risk.leverage.floor; }, dbl));
  k.push_back(key("leverage.ramp_ms", any, "ms", "ramp length outside the zone",
                  [](RunConfig& c) -> auto& { return c.replay.risk.leverage.ramp_ms; }, ms));
  k.push_back(key("risk.liquidation_slippage", any, "underlying units", "adverse fill offset on liquidation",
                  [](RunConfig& c) -> auto& { return c.replay.risk.liquidation_slippage; }, dbl));

  // halts and replay
  k.push_back(key("halt.enabled", any, "", "enforce resolution-zone halts",
                  [](RunConfig& c) -> auto& { return c.replay.halt_enabled; }, BoolCodec{}));
  k.push_back(key("halt.resolution_zone_ms", any, "ms", "zone length before tau",
                  [](RunConfig& c) -> auto& { return c.replay.halt.resolution_zone_ms; }, ms));
  k.push_back(key("halt.settle_lag_ms", any, "ms", "post-resolution halt stage; 0 disables",
                  [](RunConfig& c) -> auto& { return c.replay.halt.settle_lag_ms; }, ms));
  k.push_back(key("replay.grid_ms", any, "ms", "alignment grid and windowed-estimator step",
                  [](RunConfig& c) -> auto& { return c.replay.grid_ms; }, ms));
  k.push_back(key("replay.seed", any, "", "RNG seed; --seed overrides",
                  [](RunConfig& c) -> auto& { return c.replay.seed; }, IntCodec<std::uint64_t>{}));
  k.push_back(key("replay.granularity", any, "", "per-tick or summary report",
                  [](RunConfig& c) -> auto& { return c.replay.granularity; }, kGranularity));
  k.push_back(key("replay.basis_reversion", any, "per update", "mean reversion of the synthetic mark basis",
                  [](RunConfig& c) -> auto& { return c.replay.basis.reversion; }, dbl));
  k.push_back(key("replay.basis_volatility", any, "underlying units", "noise of the synthetic mark basis; 0 keeps mark = index",
                  [](RunConfig& c) -> auto& { return c.replay.basis.volatility; }, dbl));
  k.push_back(key("population.traders", any, "", "seeded synthetic traders",
                  [](RunConfig& c) -> auto& { return c.replay.population.traders; }, IntCodec<std::size_t>{}));
  k.push_back(key("population.orders_per_trader", any, "", "orders per synthetic trader",
                  [](RunConfig& c) -> auto& { return c.replay.population.orders_per_trader; }, IntCodec<std::size_t>{}));
  k.push_back(key("population.notional", any, "notional", "synthetic order size",
                  [](RunConfig& c) -> auto& { return c.replay.population.notional; }, dbl));
  k.push_back(key("population.leverage", any, "x", "synthetic order leverage",
                  [](RunConfig& c) -> auto& { return c.replay.population.leverage; }, dbl));
  return k;
}

const std::vector<KeyDef>& keys() {
  static const std::vector<KeyDef> k = build_keys();
  return k;
}

VariantSpec default_spec(VariantKind kind) {
  switch (kind) {
    case VariantKind::kConditional: return ConditionalSpec{};
    case VariantKind::kSpread: return SpreadSpec{};
    case VariantKind::kBasket: return BasketSpec{};
    case VariantKind::kVariance: return VarianceSpec{};
    case VariantKind::kEntropy: return EntropySpec{};
    case VariantKind::kLiquidity: return LiquiditySpec{};
    case VariantKind::kRolling: return RollingSpec{};
    case VariantKind::kFundingOnly: return FundingOnlySpec{};
  }
  return ConditionalSpec{};
}

}  // namespace

const std::vector<ConfigKeyDoc>& config_reference() {
  static const std::vector<ConfigKeyDoc> docs = [] {
    std::vector<ConfigKeyDoc> out;
    out.push_back({"variant", "one of conditional|spread|basket|variance|entropy|liquidity|rolling|funding-only", "",
                   "(required)", "which contract the spec file describes"});
    for (const auto& def : keys()) {
      RunConfig base;
      if (def.owner) base.spec = default_spec(*def.owner);
      out.push_back({def.key, def.type, def.unit, def.get(base).value_or("(unset)"), def.binds});
    }
    return out;
  }();
  return docs;
}

std::string config_reference_markdown() {
  const auto cell = [](std::string_view text) {
    std::string esc;
    for (char c : text) {
      if (c == '|') esc += '\\';
      esc += c;
    }
    return esc;
  };
  std::string out = "| key | type | unit | default | controls |\n|---|---|---|---|---|\n";
  for (const auto& d : config_reference()) {
    const std::string def = d.default_value.empty() ? "(empty)" : d.default_value;
    out += "| `" + d.key + "` | " + cell(d.type) + " | " + cell(d.unit) + " | `" + cell(def) + "` | " + cell(d.binds) +
           " |\n";
  }
  return out;
}

std::vector<ConfigEntry> parse_config_entries(std::string_view text, const std::string& source) {
  std::vector<ConfigEntry> out;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::string origin = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::kConfigValue, origin, "expected key = value");
    std::string k{trim(line.substr(0, eq))};
    if (k.empty()) throw Error(ErrorCode::kConfigValue, origin, "empty key");
    if (!seen.insert(k).second) throw Error(ErrorCode::kConfigValue, k, "key repeated at " + origin);
    out.push_back({std::move(k), std::string{trim(line.substr(eq + 1))}, origin});
  }
  return out;
}

RunConfig build_run_config(const std::vector<ConfigEntry>& entries) {
  std::set<std::string, std::less<>> seen;
  const ConfigEntry* variant = nullptr;
  for (const auto& e : entries) {
    if (!seen.insert(e.key).second) throw Error(ErrorCode::kConfigValue, e.key, "key repeated at " + e.origin);
    if (e.key == "variant") variant = &e;
  }
  if (!variant) throw Error(ErrorCode::kConfigValue, "variant", "missing required key");

  RunConfig cfg;
  const VariantKind kind = variant_kind_from_string(variant->value);
  cfg.spec = default_spec(kind);
  for (const auto& e : entries) {
    if (e.key == "variant") continue;
    auto it = std::find_if(keys().begin(), keys().end(), [&](const KeyDef& d) { return d.key == e.key; });
    if (it == keys().end()) throw Error(ErrorCode::kUnknownConfigKey, e.key, "at " + e.origin);
    if (it->owner && *it->owner != kind) {
      throw Error(ErrorCode::kUnknownConfigKey, e.key,
                  "belongs to variant " + std::string{to_string(*it->owner)} + ", not " + std::string{to_string(kind)});
    }
    it->set(cfg, e.value);
  }
  return cfg;
}

RunConfig parse_run_config(std::string_view text) { return build_run_config(parse_config_entries(text)); }

RunConfig load_run_config(const std::filesystem::path& spec_path, const std::optional<std::filesystem::path>& risk_path) {
  auto entries = parse_config_entries(read_file(spec_path), spec_path.filename().string());
  if (risk_path) {
    auto more = parse_config_entries(read_file(*risk_path), risk_path->filename().string());
    entries.insert(entries.end(), more.begin(), more.end());
  }
  return build_run_config(entries);
}

std::string serialize_run_config(const RunConfig& config) {
  const VariantKind kind = kind_of(config.spec);
  std::string out = "variant = " + std::string{to_string(kind)} + "\n";
  for (const auto& def : keys()) {
    if (def.owner && *def.owner != kind) continue;
    if (auto v = def.get(config)) out += def.key + " = " + *v + "\n";
  }
  return out;
}

}  // namespace evperp
