#include "evperp/replay.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <type_traits>

#include "evperp/error.hpp"
#include "evperp/validate.hpp"

namespace evperp {

namespace {

struct LegState {
  std::optional<double> value;
  std::optional<double> half_spread;
  std::optional<double> depth;
  double volume_since_flush{0.0};
  std::optional<double> value_at_last_grid;
};

class Replayer {
 public:
  Replayer(const VariantSpec& spec, const MarketData& data, const ReplayConfig& config)
      : spec_(spec), data_(data), config_(config), kind_(kind_of(spec)), rng_(config.seed) {
    report_.variant = std::string{to_string(kind_)};
    report_.seed = config.seed;
    report_.halts_enforced = config.halt_enabled;
    legs_ = referenced_legs(spec);
    for (const auto& id : legs_) leg_state_[id];
    if (kind_ == VariantKind::kLiquidity || kind_ == VariantKind::kFundingOnly) {
      report_.caveats.push_back(std::string{kReflexivityCaveat} +
                                ": counterfactual replay does not capture trading feedback on this underlying");
    }
  }

  ReplayReport run() {
    windows_ = halt_windows(spec_, data_, config_.halt);
    report_.halt_windows = windows_;
    prepare_variant();
    build_events();
    try {
      process();
      finish();
    } catch (const Error& e) {
      report_.complete = false;
      report_.error = e.what();
    }
    std::stable_sort(report_.halt_windows.begin(), report_.halt_windows.end(),
                     [](const HaltWindow& a, const HaltWindow& b) { return a.start < b.start; });
    if (config_.granularity == ReportGranularity::kSummary) {
      report_.ticks.clear();
      report_.funding.clear();
    }
    return std::move(report_);
  }

 private:
  // -------------------------------------------------------------------------
  // Setup
  // -------------------------------------------------------------------------

  void prepare_variant() {
    if (const auto* s = std::get_if<BasketSpec>(&spec_)) {
      switch (s->weight_rule.kind) {
        case WeightRule::Kind::kStatic: weights_ = s->weight_rule.weights; break;
        case WeightRule::Kind::kEqual: weights_ = equal_weights(s->legs.size()); break;
        case WeightRule::Kind::kVolumeSnapshot:
          weights_ = volume_snapshot_weights(data_, s->legs, s->weight_rule.snapshot_ms);
          break;
      }
    }
    if (const auto* s = std::get_if<ConditionalSpec>(&spec_)) {
      floor_.emplace(FloorRule{s->denom_floor, s->floor_action});
    }
    if (const auto* s = std::get_if<VarianceSpec>(&spec_)) variance_.emplace(*s, config_.grid_ms);
    if (const auto* s = std::get_if<RollingSpec>(&spec_)) {
      std::vector<TimeMs> taus;
      for (const auto& id : s->constituents) {
        const auto& r = data_.leg(id).resolution;
        taus.push_back(r ? r->tau : std::numeric_limits<TimeMs>::max() / 2);
      }
      auto schedule = schedule_roll(s->constituents, taus, config_.halt.resolution_zone_ms, s->mechanism,
                                    s->basis_rule);
      plans_ = std::move(schedule.plans);
      for (const auto& w : schedule.warnings) {
        report_.warnings.push_back(std::string{to_string(w.code)} + " [" + w.field + "]: " + w.detail);
      }
    }
  }

  [[nodiscard]] bool windowed() const {
    return kind_ == VariantKind::kVariance || kind_ == VariantKind::kLiquidity;
  }

  void build_events() {
    TimeMs first = std::numeric_limits<TimeMs>::min();
    TimeMs last = std::numeric_limits<TimeMs>::min();
    for (const auto& id : legs_) {
      const auto& leg = data_.leg(id);
      if (leg.points.empty()) throw Error(ErrorCode::kEmptySeries, id);
      for (std::size_t i = 0; i < leg.points.size(); ++i) {
        const auto& p = leg.points[i];
        if (leg.resolution && p.time >= leg.resolution->tau) break;
        MicroSnapshot micro;
        if (leg.half_spread) micro.half_spread = (*leg.half_spread)[i];
        if (leg.depth_200bps) micro.depth_200bps = (*leg.depth_200bps)[i];
        if (leg.volume) micro.volume = (*leg.volume)[i];
        events_.push_back(PriceUpdate{id, p, micro});
        last = std::max(last, p.time);
      }
      if (leg.resolution) {
        events_.push_back(ResolutionEvent{id, *leg.resolution});
        last = std::max(last, leg.resolution->tau);
      }
    }
    if (kind_ == VariantKind::kRolling) {
      first = data_.leg(legs_.front()).points.front().time;
    } else {
      for (const auto& id : legs_) first = std::max(first, data_.leg(id).points.front().time);
    }
    start_ = first;
    end_ = last;

    const TimeMs interval = config_.risk.funding.interval_ms;
    if (interval <= 0) throw Error(ErrorCode::kInvalidParameter, "funding.interval_ms", "must be positive");
    for (TimeMs t = start_ + interval; t <= end_; t += interval) events_.push_back(FundingTick{t});

    for (const auto& plan : plans_) {
      if (plan.mechanism.kind != RollMechanism::Kind::kCliff) {
        for (TimeMs t = plan.start; t < plan.end; t += config_.grid_ms) events_.push_back(RollCheckpoint{t});
      }
      events_.push_back(RollCheckpoint{plan.end});
    }

    for (const auto& o : config_.orders) events_.push_back(o);
    add_population();
    sort_events(events_);
    next_grid_ = start_;
  }

  void add_population() {
    const auto& pop = config_.population;
    if (pop.traders == 0 || end_ <= start_) return;
    std::mt19937_64 rng{config_.seed ^ 0x9e3779b97f4a7c15ULL};
    std::uniform_int_distribution<TimeMs> when(start_, end_);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < pop.traders; ++i) {
      for (std::size_t j = 0; j < pop.orders_per_trader; ++j) {
        const TimeMs t = when(rng);
        const Side side = coin(rng) ? Side::kLong : Side::kShort;
        events_.push_back(TraderOrder{t, "pop" + std::to_string(i), side, pop.notional, pop.leverage});
      }
    }
  }

  // -------------------------------------------------------------------------
  // Main loop
  // -------------------------------------------------------------------------

  void process() {
    std::size_t k = 0;
    while (k < events_.size()) {
      const TimeMs t = event_time(events_[k]);
      std::size_t end = k;
      while (end < events_.size() && event_time(events_[end]) == t) ++end;

      if (windowed()) flush_grid(t, false);
      update_phase(t);

      std::vector<const ResolutionEvent*> resolutions;
      bool prices = false;
      for (std::size_t i = k; i < end; ++i) {
        if (const auto* r = std::get_if<ResolutionEvent>(&events_[i])) {
          resolutions.push_back(r);
        } else if (const auto* p = std::get_if<PriceUpdate>(&events_[i])) {
          on_price(*p);
          prices = true;
        }
      }
      // Resolutions sort before prices, so outcomes are frozen before any
      // valuation at this timestamp.
      if (!resolutions.empty()) on_resolutions(t, resolutions);
      if (prices && !state_.is_absorbed() && !windowed()) refresh(t);
      if (windowed()) flush_grid(t, true);
      check_liquidations(t);

      for (std::size_t i = k; i < end; ++i) {
        if (state_.is_absorbed()) break;
        if (std::holds_alternative<RollCheckpoint>(events_[i])) on_roll_checkpoint(t);
        if (std::holds_alternative<FundingTick>(events_[i])) on_funding(t);
      }
      check_liquidations(t);
      for (std::size_t i = k; i < end; ++i) {
        if (const auto* o = std::get_if<TraderOrder>(&events_[i])) on_order(*o);
      }
      last_time_ = t;
      k = end;
    }
  }

  void update_phase(TimeMs t) {
    if (state_.is_absorbed()) return;
    const bool halted = config_.halt_enabled && in_any_window(windows_, t);
    if (halted && state_.phase() == Phase::kActive) state_.transition(Phase::kHalted);
    if (!halted && state_.phase() == Phase::kHalted) state_.transition(Phase::kActive);
  }

  void on_price(const PriceUpdate& p) {
    ++report_.price_updates;
    auto& s = leg_state_[p.leg_id];
    if (state_.frozen(p.leg_id)) return;
    s.value = p.point.value;
    if (p.micro.half_spread) s.half_spread = p.micro.half_spread;
    if (p.micro.depth_200bps) s.depth = p.micro.depth_200bps;
    if (p.micro.volume) {
      s.volume_since_flush += *p.micro.volume;
      if (const auto* r = std::get_if<RollingSpec>(&spec_); r && roll_cursor_ < plans_.size()) {
        const auto& plan = plans_[roll_cursor_];
        if (p.leg_id == r->constituents[plan.to_constituent] && p.point.time >= plan.start) {
          successor_volume_ += *p.micro.volume;
        }
      }
    }
  }

  // -------------------------------------------------------------------------
  // Index and mark
  // -------------------------------------------------------------------------

  std::optional<double> leg(const LegId& id) const {
    if (const auto r = state_.frozen(id)) return static_cast<double>(r->outcome);
    return leg_state_.at(id).value;
  }

  /// Event-driven underlying; windowed variants are handled in flush_grid.
  std::optional<double> compute_index() {
    gap_ = false;
    switch (kind_) {
      case VariantKind::kConditional: {
        const auto& s = std::get<ConditionalSpec>(spec_);
        const auto a_frozen = state_.frozen(s.leg_a);
        const auto b_frozen = state_.frozen(s.leg_b);
        if (b_frozen && condition_outcome(s, b_frozen->outcome) == 1) return leg(s.leg_a);
        if (a_frozen) return static_cast<double>(a_frozen->outcome);
        if (b_frozen) return index_;  // condition failed; early termination takes over
        const auto a = leg(s.leg_a);
        const auto b = leg(s.leg_b);
        const auto joint = s.joint_leg ? leg(*s.joint_leg) : a;
        if (!a || !b || !joint) return std::nullopt;
        const double denom = s.joint_leg ? *b : 1.0 - *b;
        const auto sample = floor_->step(*joint, denom);
        gap_ = sample.gap;
        return sample.value;
      }
      case VariantKind::kSpread: {
        const auto& s = std::get<SpreadSpec>(spec_);
        const auto a = leg(s.leg_a);
        const auto b = leg(s.leg_b);
        if (!a || !b) return std::nullopt;
        return *a - *b;
      }
      case VariantKind::kBasket: {
        const auto values = basket_values();
        if (!values) return std::nullopt;
        return std::clamp(basket_value(*values, weights_), 0.0, 1.0);
      }
      case VariantKind::kEntropy: {
        const auto& s = std::get<EntropySpec>(spec_);
        if (state_.frozen(s.leg)) return 0.0;
        const auto p = leg(s.leg);
        if (!p) return std::nullopt;
        return binary_entropy(*p);
      }
      case VariantKind::kRolling: {
        const auto& s = std::get<RollingSpec>(spec_);
        const auto current = leg(s.constituents[state_.active_constituent]);
        if (!current) return std::nullopt;
        if (state_.active_constituent + 1 >= s.constituents.size() || lambda_ == 0.0) return current;
        const auto next = leg(s.constituents[state_.active_constituent + 1]);
        if (!next) return current;
        return rolled_index(*current, *next, lambda_);
      }
      case VariantKind::kFundingOnly: {
        const auto& s = std::get<FundingOnlySpec>(spec_);
        const auto a = leg(s.target.leg_a);
        if (!a) return std::nullopt;
        if (s.target.kind == FundingTargetSpec::Kind::kBasis) {
          // Leg mark minus leg index: the overlay alone.
          return funding_target_value(s.target.kind, *a + overlay_, *a);
        }
        const auto b = leg(s.target.leg_b);
        if (!b) return std::nullopt;
        return funding_target_value(s.target.kind, *a, *b);
      }
      default:
        return std::nullopt;
    }
  }

  std::optional<std::vector<double>> basket_values() const {
    const auto& s = std::get<BasketSpec>(spec_);
    std::vector<double> values;
    values.reserve(s.legs.size());
    for (const auto& id : s.legs) {
      const auto v = leg(id);
      if (!v) return std::nullopt;
      values.push_back(*v);
    }
    return values;
  }

  Support support() const {
    if (kind_ == VariantKind::kFundingOnly) return kRealSupport;
    return declared_support(spec_);
  }

  void step_overlay() {
    if (config_.basis.volatility <= 0.0) return;
    std::normal_distribution<double> z;
    overlay_ = overlay_ * (1.0 - config_.basis.reversion) + config_.basis.volatility * z(rng_);
  }

  /// Sets index and mark and records a tick.
  void set_index(TimeMs t, double value) {
    index_ = value;
    if (kind_ == VariantKind::kFundingOnly) {
      mark_ = value;
    } else {
      const auto sup = support();
      mark_ = std::clamp(value + overlay_, sup.lo, sup.hi);
    }
    state_.underlying = value;
    state_.mark = *mark_;
    history_.push(t, value, gap_);
    if (!report_.ticks.empty() && report_.ticks.back().time == t) report_.ticks.pop_back();
    report_.ticks.push_back({t, value, *mark_, gap_});
    track_floor_gap(t);
  }

  void refresh(TimeMs t) {
    step_overlay();
    if (const auto v = compute_index()) set_index(t, *v);
  }

  void track_floor_gap(TimeMs t) {
    if (gap_ && !gap_start_) gap_start_ = t;
    if (!gap_ && gap_start_) {
      if (t > *gap_start_) {
        report_.halt_windows.push_back({*gap_start_, t, std::get<ConditionalSpec>(spec_).leg_b,
                                        HaltStage::kDenominatorFloor});
      }
      gap_start_.reset();
    }
  }

  // -------------------------------------------------------------------------
  // Windowed variants
  // -------------------------------------------------------------------------

  void flush_grid(TimeMs t, bool inclusive) {
    while (inclusive ? next_grid_ <= t : next_grid_ < t) {
      if (next_grid_ > end_) return;
      emit_grid_point(next_grid_);
      next_grid_ += config_.grid_ms;
    }
  }

  void emit_grid_point(TimeMs g) {
    if (state_.is_absorbed()) return;
    std::optional<double> value;
    if (const auto* s = std::get_if<VarianceSpec>(&spec_)) {
      const auto p = leg(s->leg);
      if (p) value = variance_->push(*p);
    } else if (const auto* s = std::get_if<LiquiditySpec>(&spec_)) {
      value = liquidity_point(*s);
    }
    if (value) {
      step_overlay();
      set_index(g, *value);
    }
  }

  std::optional<double> liquidity_point(const LiquiditySpec& s) {
    std::vector<double> xs;
    bool ready = true;
    for (const auto& id : s.member_legs) {
      auto& st = leg_state_[id];
      const auto p = leg(id);
      switch (s.measure) {
        case LiquidityMeasure::kMedianHalfSpread:
          if (!st.half_spread) ready = false; else xs.push_back(*st.half_spread);
          break;
        case LiquidityMeasure::kDepth:
          if (!st.depth) ready = false; else xs.push_back(*st.depth);
          break;
        case LiquidityMeasure::kAmihud:
          if (!p || !st.value_at_last_grid) {
            ready = false;
          } else {
            xs.push_back(amihud_value(st.volume_since_flush, std::abs(*p - *st.value_at_last_grid), s.amihud_floor));
          }
          break;
      }
      st.value_at_last_grid = p;
      st.volume_since_flush = 0.0;
    }
    if (!ready || xs.empty()) return std::nullopt;
    if (s.measure == LiquidityMeasure::kMedianHalfSpread) return median_of(xs);
    if (s.depth_aggregation == CrossMemberAggregation::kMedian) return median_of(xs);
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
  }

  // -------------------------------------------------------------------------
  // Resolutions and settlement
  // -------------------------------------------------------------------------

  void on_resolutions(TimeMs t, const std::vector<const ResolutionEvent*>& events) {
    if (state_.is_absorbed()) return;
    const std::optional<double> pre = index_;
    std::vector<std::size_t> newly_basket;
    for (const auto* e : events) {
      if (const auto* b = std::get_if<BasketSpec>(&spec_)) {
        const auto it = std::find(b->legs.begin(), b->legs.end(), e->leg_id);
        if (it != b->legs.end() && !state_.frozen(e->leg_id)) {
          newly_basket.push_back(static_cast<std::size_t>(it - b->legs.begin()));
        }
      }
      freeze_resolution(state_, *e);
    }

    if (const auto* b = std::get_if<BasketSpec>(&spec_);
        b && b->rebalance == RebalanceRule::kDropOnResolution && !newly_basket.empty()) {
      bool survivors = false;
      for (std::size_t i = 0; i < b->legs.size(); ++i) {
        if (!state_.frozen(b->legs[i])) survivors = true;
      }
      if (survivors) {
        // Drop every resolved leg that still carries weight.
        std::vector<std::size_t> drop;
        for (std::size_t i = 0; i < b->legs.size(); ++i) {
          if (state_.frozen(b->legs[i]) && weights_[i] > 0.0) drop.push_back(i);
        }
        const auto values = basket_values();
        auto outcome = rebalance_weights(weights_, drop, b->rebalance,
                                         values ? std::span<const double>(*values) : std::span<const double>{}, t);
        weights_ = std::move(outcome.weights);
        if (outcome.discontinuity) report_.discontinuities.push_back(*outcome.discontinuity);
      }
    }

    // The collapse itself moves the index before anything settles.
    if (const auto v = compute_index()) set_index(t, *v);
    if (kind_ == VariantKind::kEntropy && pre) {
      report_.discontinuities.push_back({t, *pre, 0.0, "entropy-collapse"});
    }
    check_liquidations(t);

    for (const auto* e : events) {
      if (state_.is_absorbed()) break;
      if (!std::count(legs_.begin(), legs_.end(), e->leg_id)) continue;
      std::optional<SettlementRecord> record;
      std::visit(
          [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, ConditionalSpec>) {
              record = settle_conditional(state_, s, *e, history_);
            } else if constexpr (std::is_same_v<S, SpreadSpec>) {
              record = settle_spread(state_, s, *e);
            } else if constexpr (std::is_same_v<S, BasketSpec>) {
              record = settle_basket(state_, s, weights_, *e);
            } else if constexpr (std::is_same_v<S, EntropySpec>) {
              record = settle_entropy(state_, s, *e);
            } else if constexpr (std::is_same_v<S, RollingSpec>) {
              record = settle_rolling(state_, s, *e);
            }
          },
          spec_);
      if (record) {
        if (kind_ == VariantKind::kBasket) report_.settlement_weights = weights_;
        close_all(kind_ == VariantKind::kFundingOnly ? 0.0 : record->value);
        report_.settlements.push_back(*record);
        return;
      }
    }

    if (const auto* r = std::get_if<RollingSpec>(&spec_)) {
      // The outgoing constituent resolved before its roll finished.
      const auto& active = r->constituents[state_.active_constituent];
      if (roll_cursor_ < plans_.size() && state_.frozen(active)) complete_roll(t, lambda_, true);
    }
  }

  void close_all(double price) {
    for (std::size_t i = 0; i < positions().size(); ++i) close_position(i, 1.0, price);
    positions().clear();
  }

  // -------------------------------------------------------------------------
  // Rolls
  // -------------------------------------------------------------------------

  void on_roll_checkpoint(TimeMs t) {
    if (roll_cursor_ >= plans_.size() || !index_) return;
    const auto& plan = plans_[roll_cursor_];
    if (t < plan.start) return;
    std::optional<double> volume;
    if (plan.mechanism.kind == RollMechanism::Kind::kVolumeWeighted) volume = successor_volume_;
    const double next = roll_weight(plan, t, volume);
    if (next == lambda_) return;
    step_lambda(t, next);
    if (lambda_ >= 1.0) complete_roll(t, lambda_, false);
  }

  void step_lambda(TimeMs t, double next) {
    const auto& plan = plans_[roll_cursor_];
    const double before_lambda = lambda_;
    const double before = *mark_;
    const double before_index = *index_;
    lambda_ = next;
    if (const auto v = compute_index()) set_index(t, *v);
    const double after = *mark_;
    const auto adj = apply_roll_basis(positions(), before, after, plan.basis_rule);
    double realized = 0.0;
    double cash = 0.0;
    for (std::size_t i = 0; i < adj.cash.size(); ++i) {
      realized += adj.realized_basis[i];
      cash += adj.cash[i];
      report_.trader_equity_change += adj.cash[i];
      report_.pool_change -= adj.cash[i];
    }
    plans_[roll_cursor_].realized_basis += realized;
    report_.rolls.push_back({t, plan.from_constituent, plan.to_constituent, before_lambda, lambda_, before_index,
                             *index_, plan.basis_rule, realized, cash});
  }

  void complete_roll(TimeMs t, double current_lambda, bool forced) {
    if (!index_ || !mark_) return;
    if (forced && current_lambda < 1.0) step_lambda(t, 1.0);
    auto& plan = plans_[roll_cursor_];
    plan.executed = true;
    const auto& r = std::get<RollingSpec>(spec_);
    report_.settlements.push_back({t, SettlementKind::kRollConversion, *index_, r.constituents[plan.from_constituent],
                                   std::string{to_string(plan.basis_rule)} + (forced ? "+forced" : "")});
    state_.active_constituent = plan.to_constituent;
    lambda_ = 0.0;
    successor_volume_ = 0.0;
    ++roll_cursor_;
  }

  [[nodiscard]] bool roll_overlap_active(TimeMs t) const {
    if (roll_cursor_ >= plans_.size()) return false;
    const auto& plan = plans_[roll_cursor_];
    return plan.overlaps_zone && t >= plan.deadline;
  }

  // -------------------------------------------------------------------------
  // Risk
  // -------------------------------------------------------------------------

  std::vector<Position>& positions() { return state_.positions; }

  std::optional<TimeMs> time_to_closest_tau(TimeMs t) const {
    if (!has_scheduled_resolution(kind_)) return std::nullopt;
    std::vector<LegId> candidates;
    if (const auto* r = std::get_if<RollingSpec>(&spec_)) {
      candidates.push_back(r->constituents[state_.active_constituent]);
    } else {
      candidates = legs_;
      if (const auto* c = std::get_if<ConditionalSpec>(&spec_); c && c->joint_leg) {
        candidates.erase(std::remove(candidates.begin(), candidates.end(), *c->joint_leg), candidates.end());
      }
    }
    std::optional<TimeMs> best;
    for (const auto& id : candidates) {
      if (state_.frozen(id)) continue;
      const auto& res = data_.leg(id).resolution;
      if (!res) continue;
      const TimeMs d = std::max<TimeMs>(0, res->tau - t);
      if (!best || d < *best) best = d;
    }
    return best;
  }

  JumpInputs jump_inputs() const {
    JumpInputs in;
    in.kind = kind_;
    in.index = index_.value_or(0.0);
    in.aggregation = config_.risk.margin.aggregation;
    if (const auto* s = std::get_if<SpreadSpec>(&spec_)) {
      for (const auto& id : {s->leg_a, s->leg_b}) {
        in.leg_values.push_back(leg(id).value_or(0.5));
        in.resolved.push_back(state_.frozen(id).has_value());
      }
      const auto& ra = data_.leg(s->leg_a).resolution;
      const auto& rb = data_.leg(s->leg_b).resolution;
      in.simultaneous = ra && rb && std::llabs(ra->tau - rb->tau) <= s->simultaneous_within_ms;
    } else if (const auto* s = std::get_if<BasketSpec>(&spec_)) {
      for (const auto& id : s->legs) {
        in.leg_values.push_back(leg(id).value_or(0.5));
        in.resolved.push_back(state_.frozen(id).has_value());
      }
      in.weights = weights_;
    } else if (const auto* s = std::get_if<RollingSpec>(&spec_)) {
      const std::size_t i = state_.active_constituent;
      in.leg_values.push_back(leg(s->constituents[i]).value_or(0.5));
      in.resolved.push_back(state_.frozen(s->constituents[i]).has_value());
      in.weights.push_back(1.0 - lambda_);
      if (i + 1 < s->constituents.size()) {
        in.leg_values.push_back(leg(s->constituents[i + 1]).value_or(0.5));
        in.resolved.push_back(state_.frozen(s->constituents[i + 1]).has_value());
        in.weights.push_back(lambda_);
      }
    }
    return in;
  }

  double maintenance_for(double notional, Side side, TimeMs t) const {
    const double jump = jump_magnitude(jump_inputs(), side);
    return maintenance_margin(notional, jump, config_.risk.margin, time_to_closest_tau(t), roll_overlap_active(t));
  }

  /// Price positions are marked at; funding-only positions carry no price exposure.
  double position_mark() const { return kind_ == VariantKind::kFundingOnly ? 0.0 : *mark_; }

  void check_liquidations(TimeMs t) {
    if (state_.is_absorbed() || !mark_ || positions().empty()) return;
    const auto sup = support();
    const double index = kind_ == VariantKind::kFundingOnly ? 0.0 : *index_;
    std::vector<Position> kept;
    for (auto& p : positions()) {
      const double maintenance = maintenance_for(p.notional, p.side, t);
      const auto check = check_liquidation(p, position_mark(), index, maintenance,
                                           config_.risk.liquidation_slippage, sup.lo, sup.hi);
      if (!check.liquidate) {
        kept.push_back(p);
        continue;
      }
      const double shortfall = settle_close(p, check.fill_price);
      report_.liquidations.push_back({t, p.trader_id, p.side, p.notional, check.fill_price,
                                      check.equity_at_fill, shortfall});
    }
    positions() = std::move(kept);
  }

  /// Books a full close at `price`; returns the shortfall absorbed as bad debt.
  double settle_close(Position& p, double price) {
    settle_buffered_funding(p);
    const double pnl = p.unrealized_pnl(price);
    const double payout = p.margin_posted + p.funding_settled + pnl;
    report_.trader_equity_change += pnl + p.funding_settled;
    report_.pool_change -= pnl;
    const double shortfall = std::max(0.0, -payout);
    report_.pool_change -= shortfall;
    report_.bad_debt_total += shortfall;
    return shortfall;
  }

  /// Closes fraction f of position i at `price` (funding and margin pro rata).
  void close_position(std::size_t i, double f, double price) {
    auto& p = positions()[i];
    Position part = p;
    part.notional *= f;
    part.margin_posted *= f;
    part.funding_settled *= f;
    part.funding_buffered *= f;
    settle_close(part, price);
    p.notional -= part.notional;
    p.margin_posted -= part.margin_posted;
    p.funding_settled -= part.funding_settled;
    p.funding_buffered -= part.funding_buffered;
  }

  void on_funding(TimeMs t) {
    if (!index_ || !mark_) return;
    double rate = 0.0;
    auto cadence = SettlementCadence::Kind::kContinuous;
    if (const auto* h = std::get_if<FundingOnlySpec>(&spec_)) {
      rate = funding_only_rate(*index_, config_.risk.funding.sensitivity, h->clip_lo, h->clip_hi);
      cadence = h->cadence.kind;
    } else {
      FundingLegs legs;
      if (const auto* s = std::get_if<SpreadSpec>(&spec_)) {
        for (const auto& id : {s->leg_a, s->leg_b}) {
          legs.values.push_back(leg(id).value_or(0.5));
          legs.resolved.push_back(state_.frozen(id).has_value());
        }
      }
      rate = funding_rate(*mark_, *index_, config_.risk.funding, kind_, legs);
    }
    const auto transfers = accrue_funding(positions(), rate, cadence);
    double total = 0.0;
    for (double x : transfers) total += x;
    report_.pool_change -= total;
    report_.funding.push_back({t, rate, total});

    if (cadence == SettlementCadence::Kind::kPeriodic) {
      const TimeMs interval = std::get<FundingOnlySpec>(spec_).cadence.interval_ms;
      if (t - last_funding_flush_.value_or(start_) >= interval) {
        for (auto& p : positions()) settle_buffered_funding(p);
        last_funding_flush_ = t;
      }
    }
  }

  // -------------------------------------------------------------------------
  // Orders
  // -------------------------------------------------------------------------

  void on_order(const TraderOrder& o) {
    OrderRecord rec{o.time, o.trader_id, o.side, o.notional, o.leverage, false, {}};
    const auto reject = [&](const char* why) {
      rec.reason = why;
      report_.orders.push_back(rec);
    };
    if (state_.is_absorbed()) return reject("absorbed");
    if (!index_ || !mark_) return reject("no-index");
    if (config_.halt_enabled && in_any_window(windows_, o.time)) return reject("halt");
    if (gap_) return reject("denominator-floor");
    if (!(o.notional > 0.0) || !(o.leverage > 0.0)) return reject("invalid");
    const double cap = has_scheduled_resolution(kind_)
                           ? max_leverage(time_to_closest_tau(o.time), config_.risk.leverage,
                                          config_.halt.resolution_zone_ms)
                           : config_.risk.leverage.base;
    if (o.leverage > cap) return reject("leverage-cap");

    // Opposite-side exposure of the same trader closes first, oldest first.
    double remaining = o.notional;
    double to_close = 0.0;
    for (const auto& p : positions()) {
      if (p.trader_id == o.trader_id && p.side != o.side) to_close += p.notional;
    }
    const double opening = std::max(0.0, remaining - to_close);
    const double posted = opening / o.leverage;
    if (opening > 0.0 && posted < maintenance_for(opening, o.side, o.time)) return reject("margin");

    for (std::size_t i = 0; i < positions().size() && remaining > 0.0; ++i) {
      auto& p = positions()[i];
      if (p.trader_id != o.trader_id || p.side == o.side || p.notional <= 0.0) continue;
      const double q = std::min(remaining, p.notional);
      close_position(i, q / p.notional, position_mark());
      remaining -= q;
    }
    std::erase_if(positions(), [](const Position& p) { return p.notional <= 0.0; });
    if (opening > 0.0) {
      Position p;
      p.trader_id = o.trader_id;
      p.side = o.side;
      p.notional = opening;
      p.entry_price = position_mark();
      p.margin_posted = posted;
      p.open_time = o.time;
      positions().push_back(p);
    }
    rec.filled = true;
    report_.orders.push_back(rec);
    if (in_any_window(windows_, o.time)) ++report_.orders_filled_in_halt_windows;
  }

  // -------------------------------------------------------------------------
  // End of data
  // -------------------------------------------------------------------------

  void finish() {
    if (windowed()) flush_grid(end_, true);
    if (gap_start_ && last_time_ > *gap_start_) {
      report_.halt_windows.push_back({*gap_start_, last_time_, std::get<ConditionalSpec>(spec_).leg_b,
                                      HaltStage::kDenominatorFloor});
    }
    if (state_.is_absorbed()) return;
    const double value = index_.value_or(0.0);
    if (mark_) close_all(position_mark());
    report_.settlements.push_back({last_time_, SettlementKind::kNonePerpetual, value, std::nullopt, "end-of-data"});
  }

  const VariantSpec& spec_;
  const MarketData& data_;
  const ReplayConfig& config_;
  VariantKind kind_;
  std::mt19937_64 rng_;
  ReplayReport report_;

  std::vector<LegId> legs_;
  std::map<LegId, LegState> leg_state_;
  std::vector<ReplayEvent> events_;
  std::vector<HaltWindow> windows_;
  ContractState state_;
  TimeMs start_{0};
  TimeMs end_{0};
  TimeMs last_time_{0};
  TimeMs next_grid_{0};

  std::optional<double> index_;
  std::optional<double> mark_;
  double overlay_{0.0};
  bool gap_{false};
  std::optional<TimeMs> gap_start_;
  IndexSeries history_;

  std::optional<ConditionalFloor> floor_;
  std::optional<RollingVariance> variance_;
  std::vector<double> weights_;
  std::vector<RollPlan> plans_;
  std::size_t roll_cursor_{0};
  double lambda_{0.0};
  double successor_volume_{0.0};
  std::optional<TimeMs> last_funding_flush_;
};

}  // namespace

ReplayReport replay(const VariantSpec& spec, const MarketData& data, const ReplayConfig& config) {
  validate_spec(spec, data).result.throw_if_failed();
  if (config.grid_ms <= 0) throw Error(ErrorCode::kInvalidParameter, "grid_ms", "must be positive");
  Replayer replayer{spec, data, config};
  return replayer.run();
}

IndexSeries build_index(const VariantSpec& spec, const MarketData& data, TimeMs grid_ms) {
  ReplayConfig config;
  config.grid_ms = grid_ms;
  config.halt_enabled = false;
  const auto report = replay(spec, data, config);
  if (!report.complete) throw Error(ErrorCode::kInvalidParameter, "build-index", report.error);
  IndexSeries out;
  out.support = declared_support(spec);
  out.provenance = kind_of(spec);
  for (const auto& tick : report.ticks) out.push(tick.time, tick.index, tick.gap);
  return out;
}

}  // namespace evperp
