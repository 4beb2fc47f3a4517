#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evperp/replay.hpp"
#include "evperp/types.hpp"

namespace evperp {

/// Everything a run needs besides market data. `replay.risk` carries the
/// risk parameters; orders come from the data directory, not from here.
struct RunConfig {
  VariantSpec spec{ConditionalSpec{}};
  ReplayConfig replay{};

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Reference entry for one configuration key.
struct ConfigKeyDoc {
  std::string key;
  std::string type;
  std::string unit;
  std::string default_value;
  std::string binds;  // which modelling choice the key controls
};

const std::vector<ConfigKeyDoc>& config_reference();
/// Markdown table of config_reference().
std::string config_reference_markdown();

struct ConfigEntry {
  std::string key;
  std::string value;
  std::string origin;  // "file:line"
};

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
/// A key repeated within the text is an error.
std::vector<ConfigEntry> parse_config_entries(std::string_view text, const std::string& source = "config");

/// Applies entries on top of defaults. `variant` must be present. Keys that
/// belong to another variant, or that nobody knows, throw UnknownConfigKey.
RunConfig build_run_config(const std::vector<ConfigEntry>& entries);

RunConfig parse_run_config(std::string_view text);

/// Spec file plus optional risk file. The same key in both is an error.
RunConfig load_run_config(const std::filesystem::path& spec_path,
                          const std::optional<std::filesystem::path>& risk_path = std::nullopt);

/// Every key that applies to the config's variant, in reference order.
std::string serialize_run_config(const RunConfig& config);

}  // namespace evperp
