// Command-line front end. Exit codes: 0 ok, 1 validation, 2 replay, 3 I/O.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <random>

#include "evperp/batch.hpp"
#include "evperp/config.hpp"
#include "evperp/error.hpp"
#include "evperp/io.hpp"
#include "evperp/replay.hpp"
#include "evperp/report_io.hpp"
#include "evperp/synthetic.hpp"
#include "evperp/taxonomy.hpp"

namespace fs = std::filesystem;
using namespace evperp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitReplay = 2;
constexpr int kExitIo = 3;

int exit_code_for(const Error& e) { return e.code() == ErrorCode::kIoFailure ? kExitIo : kExitValidation; }

int cmd_build_index(const fs::path& spec, const fs::path& data_dir, const fs::path& out) {
  const RunConfig cfg = load_run_config(spec);
  const MarketData data = load_market_data(data_dir);
  const IndexSeries series = build_index(cfg.spec, data, cfg.replay.grid_ms);
  write_file(out, index_series_to_csv(series));
  return kExitOk;
}

int cmd_replay(const fs::path& spec, const fs::path& data_dir, const std::optional<fs::path>& risk,
               std::optional<std::uint64_t> seed, const fs::path& out, ReportFormat format) {
  const ReplayReport report = replay_files(spec, data_dir, risk, seed);
  emit_report(report, format, out);
  if (!report.complete) {
    std::cerr << "replay stopped: " << report.error << "\n";
    return kExitReplay;
  }
  return kExitOk;
}

int cmd_generate(const std::string& kind, std::uint64_t seed, std::size_t legs, TimeMs horizon, TimeMs grid, double p0,
                 const fs::path& out) {
  if (legs == 0) throw Error(ErrorCode::kInvalidParameter, "legs", "need at least one leg");
  MarketData data;
  if (kind == "bridge") {
    std::mt19937_64 seeds{seed};
    std::vector<LegSeries> series;
    for (std::size_t i = 0; i < legs; ++i) {
      series.push_back(generate_bridge_path(seeds(), horizon, grid, p0, "leg" + std::to_string(i)));
    }
    data = to_market_data(std::move(series));
  } else if (kind == "negrisk") {
    auto sample = generate_negrisk_group(seed, legs, horizon, grid);
    data = to_market_data(std::move(sample.legs), {std::move(sample.group)});
  } else {
    throw Error(ErrorCode::kConfigValue, "kind", "expected bridge or negrisk, got '" + kind + "'");
  }
  write_market_data(out, data);
  return kExitOk;
}

int cmd_batch(const fs::path& manifest, const fs::path& out, ReportFormat format, unsigned jobs) {
  const auto entries = parse_manifest(read_file(manifest), manifest.parent_path());
  const auto result = run_batch(entries, out, format, jobs);
  std::cout << result.runs << " runs, " << result.failed << " failed\n";
  return result.failed ? kExitReplay : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-derivative perpetual replay toolkit"};
  app.require_subcommand(1);

  fs::path spec, data, out, risk_path, manifest;
  std::uint64_t seed = 0;
  std::string format_text = "jsonl";

  auto* build = app.add_subcommand("build-index", "construct a variant's underlying series");
  build->add_option("--spec", spec, "variant config file")->required();
  build->add_option("--data", data, "market data directory")->required();
  build->add_option("--out", out, "output CSV path")->required();

  auto* rep = app.add_subcommand("replay", "full lifecycle replay");
  rep->add_option("--spec", spec, "variant config file")->required();
  rep->add_option("--data", data, "market data directory")->required();
  auto* risk_opt = rep->add_option("--risk", risk_path, "risk and replay config file");
  auto* seed_opt = rep->add_option("--seed", seed, "RNG seed, overrides replay.seed");
  rep->add_option("--out", out, "report directory")->required();
  rep->add_option("--format", format_text, "jsonl or csv-bundle")->check(CLI::IsMember({"jsonl", "csv-bundle"}));

  std::string kind;
  std::size_t legs = 1;
  TimeMs horizon = 10 * kDayMs, grid = 10 * 60 * kSecondMs;
  double p0 = 0.5;
  auto* gen = app.add_subcommand("generate", "synthetic bounded-martingale data");
  gen->add_option("--kind", kind, "bridge or negrisk")->required()->check(CLI::IsMember({"bridge", "negrisk"}));
  gen->add_option("--seed", seed, "RNG seed")->required();
  gen->add_option("--legs", legs, "number of legs");
  gen->add_option("--horizon-ms", horizon, "time to resolution");
  gen->add_option("--grid-ms", grid, "tick spacing");
  gen->add_option("--p0", p0, "bridge starting probability");
  gen->add_option("--out", out, "data directory")->required();

  std::string table;
  auto* tax = app.add_subcommand("taxonomy", "print the inheritance or evaluability table");
  tax->add_option("--table", table, "inheritance or evaluability")
      ->required()
      ->check(CLI::IsMember({"inheritance", "evaluability"}));

  unsigned jobs = 0;
  auto* bat = app.add_subcommand("batch", "deterministic batch replays");
  bat->add_option("--manifest", manifest, "lines of spec,data,seed[,risk]")->required();
  bat->add_option("--out", out, "output directory")->required();
  bat->add_option("--format", format_text, "jsonl or csv-bundle")->check(CLI::IsMember({"jsonl", "csv-bundle"}));
  bat->add_option("--jobs", jobs, "worker threads, 0 = hardware concurrency");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    const ReportFormat format = report_format_from_string(format_text);
    if (*build) return cmd_build_index(spec, data, out);
    if (*rep) {
      return cmd_replay(spec, data, *risk_opt ? std::optional<fs::path>(risk_path) : std::nullopt,
                        *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt, out, format);
    }
    if (*gen) return cmd_generate(kind, seed, legs, horizon, grid, p0, out);
    if (*tax) {
      std::cout << render_taxonomy(taxonomy_table_from_string(table));
      return kExitOk;
    }
    if (*bat) return cmd_batch(manifest, out, format, jobs);
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "IoFailure: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitValidation;
}
