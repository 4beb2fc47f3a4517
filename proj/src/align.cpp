#include "evperp/align.hpp"

#include <algorithm>
#include <limits>

#include "evperp/error.hpp"

namespace evperp {

std::size_t AlignedGrid::leg_index(const LegId& id) const {
  auto it = std::find(leg_ids.begin(), leg_ids.end(), id);
  if (it == leg_ids.end()) throw Error(ErrorCode::kMissingLeg, id);
  return static_cast<std::size_t>(it - leg_ids.begin());
}

std::optional<double> value_at(const LegSeries& leg, TimeMs t) {
  if (leg.resolution && t >= leg.resolution->tau) return static_cast<double>(leg.resolution->outcome);
  auto it = std::upper_bound(leg.points.begin(), leg.points.end(), t,
                             [](TimeMs lhs, const ProbabilityPoint& p) { return lhs < p.time; });
  if (it == leg.points.begin()) return std::nullopt;
  return std::prev(it)->value;
}

AlignedGrid align_series(std::span<const LegSeries* const> legs, const AlignOptions& options) {
  if (options.grid_ms <= 0) throw Error(ErrorCode::kInvalidParameter, "grid_ms", "must be positive");

  TimeMs first_common = std::numeric_limits<TimeMs>::min();
  TimeMs last_any = std::numeric_limits<TimeMs>::min();
  for (const LegSeries* leg : legs) {
    if (leg->points.empty()) throw Error(ErrorCode::kEmptySeries, leg->leg_id);
    first_common = std::max(first_common, leg->points.front().time);
    last_any = std::max(last_any, leg->points.back().time);
    if (leg->resolution) last_any = std::max(last_any, leg->resolution->tau);
  }

  AlignedGrid grid;
  grid.grid_ms = options.grid_ms;
  if (legs.empty()) return grid;

  const TimeMs start = options.start.value_or(first_common);
  const TimeMs end = options.end.value_or(last_any);
  for (const LegSeries* leg : legs) {
    if (leg->points.front().time > start) {
      throw Error(ErrorCode::kEmptySeries, leg->leg_id, "no observation at or before grid start");
    }
  }
  for (TimeMs t = start; t <= end; t += options.grid_ms) grid.times.push_back(t);

  const std::size_t n = grid.times.size();
  for (const LegSeries* leg : legs) {
    grid.leg_ids.push_back(leg->leg_id);
    grid.resolutions.push_back(leg->resolution);

    std::vector<double> values(n);
    std::optional<std::vector<double>> half_spread;
    std::optional<std::vector<double>> depth;
    std::optional<std::vector<double>> volume;
    if (leg->half_spread) half_spread.emplace(n, 0.0);
    if (leg->depth_200bps) depth.emplace(n, 0.0);
    if (leg->volume) volume.emplace(n, 0.0);

    std::size_t cursor = 0;  // first point with time > current grid time
    std::size_t volume_cursor = 0;
    const auto& pts = leg->points;
    for (std::size_t k = 0; k < n; ++k) {
      const TimeMs t = grid.times[k];
      while (cursor < pts.size() && pts[cursor].time <= t) ++cursor;
      const std::size_t last = cursor - 1;  // cursor >= 1 since first point <= start
      const bool resolved = leg->resolution && t >= leg->resolution->tau;
      values[k] = resolved ? static_cast<double>(leg->resolution->outcome) : pts[last].value;
      if (half_spread) (*half_spread)[k] = (*leg->half_spread)[last];
      if (depth) (*depth)[k] = (*leg->depth_200bps)[last];
      if (volume) {
        const TimeMs lo = t - options.grid_ms;
        while (volume_cursor < pts.size() && pts[volume_cursor].time <= lo) ++volume_cursor;
        double sum = 0.0;
        for (std::size_t j = volume_cursor; j < cursor; ++j) sum += (*leg->volume)[j];
        (*volume)[k] = sum;
      }
    }
    grid.values.push_back(std::move(values));
    grid.half_spread.push_back(std::move(half_spread));
    grid.depth_200bps.push_back(std::move(depth));
    grid.volume.push_back(std::move(volume));
  }
  return grid;
}

AlignedGrid align_series(const MarketData& data, const std::vector<LegId>& legs,
                         const AlignOptions& options) {
  std::vector<const LegSeries*> ptrs;
  ptrs.reserve(legs.size());
  for (const auto& id : legs) ptrs.push_back(&data.leg(id));
  return align_series(std::span<const LegSeries* const>(ptrs), options);
}

}  // namespace evperp
