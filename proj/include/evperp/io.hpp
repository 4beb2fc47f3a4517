#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "evperp/types.hpp"

namespace evperp {

// ---------------------------------------------------------------------------
// CSV primitives (RFC 4180 quoting, no embedded newlines in data files)
// ---------------------------------------------------------------------------

std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);
std::string join_csv(const std::vector<std::string>& fields);

/// Shortest text that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view text, const std::string& field);
std::int64_t parse_int(std::string_view text, const std::string& field);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// ---------------------------------------------------------------------------
// Market data files
// ---------------------------------------------------------------------------

inline constexpr const char* kTicksFile = "ticks.csv";
inline constexpr const char* kResolutionsFile = "resolutions.csv";
inline constexpr const char* kNegRiskFile = "negrisk.csv";
inline constexpr const char* kOrdersFile = "orders.csv";

/// t_ms,leg_id,mid[,bid,ask,half_spread,depth_200bps,volume]. Legs may be
/// interleaved; each leg's rows must be strictly increasing in time. When
/// bid and ask are present without half_spread, half_spread = (ask - bid) / 2.
std::map<LegId, LegSeries> parse_leg_series(std::istream& in, const std::string& source = "ticks");
std::map<LegId, LegSeries> load_leg_series(const std::filesystem::path& path);

/// leg_id,tau_ms,outcome
std::map<LegId, ResolutionRecord> parse_resolutions(std::istream& in, const std::string& source = "resolutions");
std::map<LegId, ResolutionRecord> load_resolutions(const std::filesystem::path& path);

/// group_id,leg_id
std::vector<NegRiskGroup> parse_negrisk_groups(std::istream& in, const std::string& source = "negrisk");
std::vector<NegRiskGroup> load_negrisk_groups(const std::filesystem::path& path);

/// t_ms,trader_id,side,notional,leverage
std::vector<TraderOrder> parse_orders(std::istream& in, const std::string& source = "orders");
std::vector<TraderOrder> load_orders(const std::filesystem::path& path);

/// A data directory: ticks.csv plus optional resolutions.csv and negrisk.csv.
MarketData load_market_data(const std::filesystem::path& dir);
/// Orders from the data directory, empty when orders.csv is absent.
std::vector<TraderOrder> load_orders_if_present(const std::filesystem::path& dir);

void write_market_data(const std::filesystem::path& dir, const MarketData& data);

}  // namespace evperp
