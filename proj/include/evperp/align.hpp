#pragma once

#include <optional>
#include <span>
#include <vector>

#include "evperp/types.hpp"

namespace evperp {

inline constexpr TimeMs kDefaultGridMs = kSecondMs;

struct AlignOptions {
  TimeMs grid_ms{kDefaultGridMs};
  std::optional<TimeMs> start;  // default: latest first observation across legs
  std::optional<TimeMs> end;    // default: latest observation or tau across legs
};

/// Multi-leg values on a uniform grid. Row `values[i]` belongs to
/// `leg_ids[i]`; every row has `times.size()` entries.
struct AlignedGrid {
  std::vector<TimeMs> times;
  std::vector<LegId> leg_ids;
  std::vector<std::vector<double>> values;
  // Optional microstructure rows; half-spread and depth carry forward,
  // volume is summed over each grid interval (t - grid, t].
  std::vector<std::optional<std::vector<double>>> half_spread;
  std::vector<std::optional<std::vector<double>>> depth_200bps;
  std::vector<std::optional<std::vector<double>>> volume;
  std::vector<std::optional<ResolutionRecord>> resolutions;
  TimeMs grid_ms{kDefaultGridMs};

  [[nodiscard]] std::size_t leg_index(const LegId& id) const;
  [[nodiscard]] const std::vector<double>& column(const LegId& id) const {
    return values[leg_index(id)];
  }
  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

/// Last-observation-carried-forward alignment. A resolved leg reads its
/// outcome at every grid time >= tau. Only observations with time <= t are
/// ever read for grid time t.
AlignedGrid align_series(std::span<const LegSeries* const> legs, const AlignOptions& options = {});
AlignedGrid align_series(const MarketData& data, const std::vector<LegId>& legs,
                         const AlignOptions& options = {});

/// LOCF value of one leg at time t, or nullopt before its first observation.
std::optional<double> value_at(const LegSeries& leg, TimeMs t);

}  // namespace evperp
