#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "evperp/constructors.hpp"
#include "evperp/replay.hpp"

namespace evperp {

enum class ReportFormat { kJsonl, kCsvBundle };

std::string_view to_string(ReportFormat format);
ReportFormat report_format_from_string(std::string_view text);

/// One JSON object per line: meta first, then every record with a "type"
/// field (tick, funding, liquidation, order, halt, roll, discontinuity,
/// settlement), then summary. Keys appear in a fixed order.
std::string report_to_jsonl(const ReplayReport& report);
ReplayReport report_from_jsonl(std::string_view text);

inline constexpr const char* kReportJsonlFile = "report.jsonl";

/// jsonl writes <dir>/report.jsonl; csv-bundle writes one file per series.
void emit_report(const ReplayReport& report, ReportFormat format, const std::filesystem::path& dir);
ReplayReport parse_report(ReportFormat format, const std::filesystem::path& dir);

/// time,value,gap CSV of an underlying series.
std::string index_series_to_csv(const IndexSeries& series);

}  // namespace evperp
