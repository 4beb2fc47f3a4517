#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evperp/config.hpp"
#include "evperp/replay.hpp"
#include "evperp/report_io.hpp"

namespace evperp {

/// Loads the config files and data directory, applies the seed, replays.
/// Orders come from <data>/orders.csv when present.
ReplayReport replay_files(const std::filesystem::path& spec_path, const std::filesystem::path& data_dir,
                          const std::optional<std::filesystem::path>& risk_path, std::optional<std::uint64_t> seed);

struct BatchEntry {
  std::filesystem::path spec;
  std::filesystem::path data;
  std::uint64_t seed{0};
  std::optional<std::filesystem::path> risk;

  friend bool operator==(const BatchEntry&, const BatchEntry&) = default;
};

/// `spec,data,seed[,risk]` per line, '#' comments allowed. Relative paths
/// resolve against `base_dir`.
std::vector<BatchEntry> parse_manifest(std::string_view text, const std::filesystem::path& base_dir);

struct BatchResult {
  std::size_t runs{0};
  std::size_t failed{0};
  std::string aggregate_csv;
};

/// Runs are ordered by (seed, spec, data, risk) before anything executes, so
/// run directories and the aggregate do not depend on manifest order or on
/// which worker finishes first. Writes <out>/run_NNNN/ and <out>/aggregate.csv.
BatchResult run_batch(const std::vector<BatchEntry>& entries, const std::filesystem::path& out_dir,
                      ReportFormat format = ReportFormat::kJsonl, unsigned workers = 0);

}  // namespace evperp
