#include "evperp/constructors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evperp/error.hpp"

namespace evperp {

namespace {

double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorCode::kInvalidParameter, what, "series lengths differ");
}

}  // namespace

Support declared_support(const VariantSpec& spec) {
  switch (kind_of(spec)) {
    case VariantKind::kConditional:
    case VariantKind::kBasket:
    case VariantKind::kEntropy:
    case VariantKind::kRolling:
      return kUnitSupport;
    case VariantKind::kSpread:
      return kSpreadSupport;
    case VariantKind::kVariance:
      return std::get<VarianceSpec>(spec).estimator == VarianceEstimator::kLevel ? kLevelVarianceSupport
                                                                                  : kNonNegativeSupport;
    case VariantKind::kLiquidity:
      return kNonNegativeSupport;
    case VariantKind::kFundingOnly:
      return std::get<FundingOnlySpec>(spec).target.kind == FundingTargetSpec::Kind::kDivergence
                 ? kNonNegativeSupport
                 : kRealSupport;
  }
  return kRealSupport;
}

// ---------------------------------------------------------------------------
// Conditional
// ---------------------------------------------------------------------------

ConditionalSample ConditionalFloor::step(double joint, double denom) {
  if (denom >= rule_.floor) {
    const double v = clamp_unit(joint / denom);
    last_valid_ = v;
    return {v, false};
  }
  const double held = last_valid_.value_or(kNoHistoryConditional);
  return {held, rule_.action == FloorAction::kHalt};
}

IndexSeries conditional_index(std::span<const TimeMs> times, std::span<const double> joint,
                              std::span<const double> denom, FloorRule rule,
                              std::optional<double> last_valid) {
  require_same_size(times.size(), joint.size(), "joint");
  require_same_size(times.size(), denom.size(), "denom");
  if (!(rule.floor > 0.0)) throw Error(ErrorCode::kInvalidParameter, "denom_floor", "must be positive");
  IndexSeries out;
  out.support = kUnitSupport;
  out.provenance = VariantKind::kConditional;
  ConditionalFloor floor{rule, last_valid};
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto sample = floor.step(joint[k], denom[k]);
    out.push(times[k], sample.value, sample.gap);
  }
  return out;
}

IndexSeries negrisk_conditional(std::span<const TimeMs> times, std::span<const double> p_i,
                                std::span<const double> p_j, FloorRule rule) {
  require_same_size(times.size(), p_j.size(), "p_j");
  std::vector<double> denom(p_j.size());
  std::transform(p_j.begin(), p_j.end(), denom.begin(), [](double p) { return 1.0 - p; });
  return conditional_index(times, p_i, denom, rule);
}

IndexSeries negrisk_conditional(const AlignedGrid& grid, const LegId& leg_i, const LegId& leg_j,
                                FloorRule rule) {
  if (leg_i == leg_j) throw Error(ErrorCode::kSameLeg, leg_j);
  return negrisk_conditional(grid.times, grid.column(leg_i), grid.column(leg_j), rule);
}

// ---------------------------------------------------------------------------
// Spread
// ---------------------------------------------------------------------------

IndexSeries spread_index(std::span<const TimeMs> times, std::span<const double> a,
                         std::span<const double> b, const std::optional<ResolutionRecord>& frozen_a,
                         const std::optional<ResolutionRecord>& frozen_b) {
  require_same_size(times.size(), a.size(), "a");
  require_same_size(times.size(), b.size(), "b");
  IndexSeries out;
  out.support = kSpreadSupport;
  out.provenance = VariantKind::kSpread;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const TimeMs t = times[k];
    out.push(t, leg_value(a[k], frozen_a, t) - leg_value(b[k], frozen_b, t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Basket
// ---------------------------------------------------------------------------

double basket_value(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw Error(ErrorCode::kWeightMismatch, "weights");
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += weights[i] * values[i];
  return sum;
}

std::vector<double> equal_weights(std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kMalformedWeights, "weights", "empty basket");
  return std::vector<double>(k, 1.0 / static_cast<double>(k));
}

std::vector<double> normalize_weights(std::span<const double> raw) {
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorCode::kMalformedWeights, "weights", "no positive weight mass");
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0.0) throw Error(ErrorCode::kMalformedWeights, "weights", "negative weight");
    out[i] = raw[i] / total;
  }
  return out;
}

RebalanceOutcome rebalance_weights(std::span<const double> weights, std::size_t resolved_leg,
                                   RebalanceRule rule, std::span<const double> values, TimeMs time) {
  const std::size_t legs[] = {resolved_leg};
  return rebalance_weights(weights, std::span<const std::size_t>(legs), rule, values, time);
}

RebalanceOutcome rebalance_weights(std::span<const double> weights,
                                   std::span<const std::size_t> resolved_legs, RebalanceRule rule,
                                   std::span<const double> values, TimeMs time) {
  std::vector<bool> resolved(weights.size(), false);
  for (std::size_t leg : resolved_legs) {
    if (leg >= weights.size()) throw Error(ErrorCode::kWeightMismatch, "resolved_leg");
    resolved[leg] = true;
  }
  RebalanceOutcome out;
  out.weights.assign(weights.begin(), weights.end());
  if (rule == RebalanceRule::kNone) return out;

  double survivors = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!resolved[i]) survivors += weights[i];
  }
  if (!(survivors > 0.0)) throw Error(ErrorCode::kAllLegsResolved, "weights", "no surviving weight");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.weights[i] = resolved[i] ? 0.0 : weights[i] / survivors;
  }
  if (!values.empty()) {
    out.discontinuity = Discontinuity{time, basket_value(values, weights),
                                      basket_value(values, out.weights), "basket-rebalance"};
  }
  return out;
}

BasketSeries basket_index(const AlignedGrid& grid, const std::vector<LegId>& legs,
                          std::span<const double> weights, RebalanceRule rule) {
  if (weights.size() != legs.size()) throw Error(ErrorCode::kWeightMismatch, "weights");
  std::vector<std::size_t> rows;
  for (const auto& id : legs) rows.push_back(grid.leg_index(id));

  BasketSeries out;
  out.index.support = kUnitSupport;
  out.index.provenance = VariantKind::kBasket;
  std::vector<double> w(weights.begin(), weights.end());
  std::vector<bool> dropped(legs.size(), false);
  std::vector<double> current(legs.size());

  for (std::size_t k = 0; k < grid.size(); ++k) {
    const TimeMs t = grid.times[k];
    for (std::size_t i = 0; i < legs.size(); ++i) {
      current[i] = leg_value(grid.values[rows[i]][k], grid.resolutions[rows[i]], t);
    }
    if (rule == RebalanceRule::kDropOnResolution) {
      std::vector<std::size_t> newly;
      std::size_t live = 0;
      for (std::size_t i = 0; i < legs.size(); ++i) {
        if (dropped[i]) continue;
        const auto& res = grid.resolutions[rows[i]];
        if (res && t >= res->tau) {
          newly.push_back(i);
        } else {
          ++live;
        }
      }
      // With no survivors the last legs settle at their current weights.
      if (!newly.empty() && live > 0) {
        auto outcome = rebalance_weights(w, newly, rule, current, t);
        w = std::move(outcome.weights);
        for (std::size_t i : newly) dropped[i] = true;
        if (outcome.discontinuity) out.discontinuities.push_back(*outcome.discontinuity);
      }
    }
    out.index.push(t, clamp_unit(basket_value(current, w)));
  }
  out.final_weights = std::move(w);
  return out;
}

std::vector<double> volume_snapshot_weights(const MarketData& data, const std::vector<LegId>& legs,
                                            TimeMs snapshot_ms) {
  std::vector<double> raw;
  for (const auto& id : legs) {
    const auto& leg = data.leg(id);
    if (!leg.volume) throw Error(ErrorCode::kMissingMicrostructureSeries, id, "volume required");
    double total = 0.0;
    for (std::size_t i = 0; i < leg.points.size() && leg.points[i].time <= snapshot_ms; ++i) {
      total += (*leg.volume)[i];
    }
    raw.push_back(total);
  }
  return normalize_weights(raw);
}

// ---------------------------------------------------------------------------
// Variance
// ---------------------------------------------------------------------------

RollingVariance::RollingVariance(const VarianceSpec& spec, TimeMs grid_ms) : spec_(spec) {
  if (grid_ms <= 0 || spec.tick_ms <= 0 || spec.window_ms <= spec.tick_ms) {
    throw Error(ErrorCode::kWindowTooShort, "variance.window_ms", "need 0 < grid, 0 < tick < window");
  }
  if (spec.tick_ms % grid_ms != 0) {
    throw Error(ErrorCode::kGranularityTooCoarse, "variance.tick_ms", "grid must divide the tick");
  }
  if (spec.window_ms % spec.tick_ms != 0) {
    throw Error(ErrorCode::kInvalidParameter, "variance.window_ms", "window must be a multiple of tick");
  }
  stride_ = static_cast<std::size_t>(spec.tick_ms / grid_ms);
  window_samples_ = static_cast<std::size_t>(spec.window_ms / spec.tick_ms) + 1;
  phases_.resize(stride_);
  for (auto& p : phases_) {
    p.ring.assign(window_samples_, 0.0);
    p.inc_ring.assign(window_samples_ - 1, 0.0);
  }
}

void RollingVariance::rebase(Phase& phase) const {
  phase.sum = 0.0;
  phase.sum_sq = 0.0;
  if (spec_.estimator == VarianceEstimator::kLevel) {
    for (std::size_t i = 0; i < phase.count; ++i) {
      const double d = phase.ring[i] - *pivot_;
      phase.sum += d;
      phase.sum_sq += d * d;
    }
  } else {
    for (std::size_t i = 0; i < phase.inc_count; ++i) phase.sum += phase.inc_ring[i];
  }
  phase.since_rebase = 0;
}

std::optional<double> RollingVariance::push(double value) {
  if (!pivot_) pivot_ = value;
  Phase& ph = phases_[pushed_ % stride_];
  ++pushed_;

  if (spec_.estimator == VarianceEstimator::kLevel) {
    const double d = value - *pivot_;
    if (ph.count == window_samples_) {
      const double old = ph.ring[ph.head] - *pivot_;
      ph.sum -= old;
      ph.sum_sq -= old * old;
    } else {
      ++ph.count;
    }
    ph.ring[ph.head] = value;
    ph.head = (ph.head + 1) % window_samples_;
    ph.sum += d;
    ph.sum_sq += d * d;
    if (++ph.since_rebase >= window_samples_) rebase(ph);
    if (ph.count < window_samples_) return std::nullopt;
    const double n = static_cast<double>(window_samples_);
    const double mean = ph.sum / n;
    return std::max(0.0, ph.sum_sq / n - mean * mean);
  }

  const std::size_t cap = window_samples_ - 1;
  if (ph.last) {
    const double r = value - *ph.last;
    const double sq = r * r;
    if (ph.inc_count == cap) {
      ph.sum -= ph.inc_ring[ph.inc_head];
    } else {
      ++ph.inc_count;
    }
    ph.inc_ring[ph.inc_head] = sq;
    ph.inc_head = (ph.inc_head + 1) % cap;
    ph.sum += sq;
    if (++ph.since_rebase >= cap) rebase(ph);
  }
  ph.last = value;
  if (ph.inc_count < cap) return std::nullopt;
  const double total = std::max(0.0, ph.sum);
  return spec_.normalization == VarianceNormalization::kPerWindow ? total / static_cast<double>(cap)
                                                                  : total;
}

IndexSeries variance_index(std::span<const TimeMs> times, std::span<const double> values,
                           const VarianceSpec& spec, TimeMs grid_ms) {
  require_same_size(times.size(), values.size(), "values");
  RollingVariance est{spec, grid_ms};
  IndexSeries out;
  out.support = spec.estimator == VarianceEstimator::kLevel ? kLevelVarianceSupport : kNonNegativeSupport;
  out.provenance = VariantKind::kVariance;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && times[k] - times[k - 1] != grid_ms) {
      throw Error(ErrorCode::kInvalidParameter, "times", "variance input must be on a uniform grid");
    }
    if (auto v = est.push(values[k])) out.push(times[k], *v);
  }
  if (out.size() == 0) {
    throw Error(ErrorCode::kWindowTooShort, "variance.window_ms", "series shorter than one window");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Entropy
// ---------------------------------------------------------------------------

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  const double q = 1.0 - p;
  return std::min(1.0, -p * std::log2(p) - q * std::log2(q));
}

IndexSeries entropy_index(std::span<const TimeMs> times, std::span<const double> p) {
  require_same_size(times.size(), p.size(), "p");
  IndexSeries out;
  out.support = kUnitSupport;
  out.provenance = VariantKind::kEntropy;
  for (std::size_t k = 0; k < times.size(); ++k) out.push(times[k], binary_entropy(p[k]));
  return out;
}

// ---------------------------------------------------------------------------
// Liquidity
// ---------------------------------------------------------------------------

double median_of(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptySeries, "median");
  const std::size_t n = values.size();
  auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double amihud_value(double volume, double abs_price_change, double floor) {
  return volume / std::max(abs_price_change, floor);
}

IndexSeries liquidity_index(const AlignedGrid& grid, const LiquiditySpec& spec) {
  std::vector<std::size_t> rows;
  for (const auto& id : spec.member_legs) {
    const std::size_t r = grid.leg_index(id);
    const bool ok = spec.measure == LiquidityMeasure::kMedianHalfSpread ? grid.half_spread[r].has_value()
                    : spec.measure == LiquidityMeasure::kDepth        ? grid.depth_200bps[r].has_value()
                                                                      : grid.volume[r].has_value();
    if (!ok) throw Error(ErrorCode::kMissingMicrostructureSeries, id);
    rows.push_back(r);
  }
  if (rows.empty()) throw Error(ErrorCode::kMissingLeg, "liquidity.member_legs");

  auto aggregate = [&](std::vector<double> xs) {
    if (spec.depth_aggregation == CrossMemberAggregation::kMedian) return median_of(std::move(xs));
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  };

  IndexSeries out;
  out.support = kNonNegativeSupport;
  out.provenance = VariantKind::kLiquidity;
  std::vector<double> xs(rows.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    switch (spec.measure) {
      case LiquidityMeasure::kMedianHalfSpread:
        for (std::size_t i = 0; i < rows.size(); ++i) xs[i] = (*grid.half_spread[rows[i]])[k];
        out.push(grid.times[k], median_of(xs));
        break;
      case LiquidityMeasure::kDepth:
        for (std::size_t i = 0; i < rows.size(); ++i) xs[i] = (*grid.depth_200bps[rows[i]])[k];
        out.push(grid.times[k], aggregate(xs));
        break;
      case LiquidityMeasure::kAmihud:
        if (k == 0) break;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const auto& p = grid.values[rows[i]];
          xs[i] = amihud_value((*grid.volume[rows[i]])[k], std::abs(p[k] - p[k - 1]), spec.amihud_floor);
        }
        out.push(grid.times[k], aggregate(xs));
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Funding-only targets
// ---------------------------------------------------------------------------

double funding_target_value(FundingTargetSpec::Kind kind, double x, double y) {
  switch (kind) {
    case FundingTargetSpec::Kind::kBasis: return x - y;
    case FundingTargetSpec::Kind::kDivergence: return std::abs(x - y);
    case FundingTargetSpec::Kind::kDisagreement: break;
  }
  throw Error(ErrorCode::kUnsupportedTarget, "funding.target", "disagreement target is not supported");
}

IndexSeries funding_target(FundingTargetSpec::Kind kind, std::span<const TimeMs> times,
                           std::span<const double> x, std::span<const double> y) {
  if (kind == FundingTargetSpec::Kind::kDisagreement) funding_target_value(kind, 0.0, 0.0);
  require_same_size(times.size(), x.size(), "x");
  require_same_size(times.size(), y.size(), "y");
  IndexSeries out;
  out.support = kind == FundingTargetSpec::Kind::kDivergence ? kNonNegativeSupport : kRealSupport;
  out.provenance = VariantKind::kFundingOnly;
  for (std::size_t k = 0; k < times.size(); ++k) out.push(times[k], funding_target_value(kind, x[k], y[k]));
  return out;
}

}  // namespace evperp
