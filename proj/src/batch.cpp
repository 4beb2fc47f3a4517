#include "evperp/batch.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "evperp/error.hpp"
#include "evperp/io.hpp"

namespace evperp {

namespace fs = std::filesystem;

ReplayReport replay_files(const fs::path& spec_path, const fs::path& data_dir, const std::optional<fs::path>& risk_path,
                          std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_run_config(spec_path, risk_path);
  const MarketData data = load_market_data(data_dir);
  cfg.replay.orders = load_orders_if_present(data_dir);
  if (seed) cfg.replay.seed = *seed;
  return replay(cfg.spec, data, cfg.replay);
}

std::vector<BatchEntry> parse_manifest(std::string_view text, const fs::path& base_dir) {
  std::vector<BatchEntry> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto resolve = [&](const std::string& p) {
    fs::path path{p};
    return path.is_absolute() ? path : base_dir / path;
  };
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string line{text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos)};
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto where = "manifest line " + std::to_string(line_no);
    auto f = split_csv_line(line);
    if (f.size() < 3 || f.size() > 4) throw Error(ErrorCode::kSchemaMismatch, where, "expected spec,data,seed[,risk]");
    const auto seed = parse_int(f[2], where + " seed");
    if (seed < 0) throw Error(ErrorCode::kSchemaMismatch, where + " seed", "must be non-negative");
    BatchEntry e{resolve(f[0]), resolve(f[1]), static_cast<std::uint64_t>(seed), std::nullopt};
    if (f.size() == 4 && !f[3].empty()) e.risk = resolve(f[3]);
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

struct RunOutcome {
  std::optional<ReplayReport> report;
  std::string error;
};

std::string aggregate_row(const BatchEntry& e, const std::string& dir, const RunOutcome& o) {
  std::vector<std::string> f{e.spec.string(), e.data.string(), e.risk ? e.risk->string() : "", std::to_string(e.seed), dir};
  if (!o.report) {
    f.insert(f.end(), {"", "false", o.error, "", "", "", "", "", "", ""});
    return join_csv(f);
  }
  const auto& r = *o.report;
  const auto* s = r.final_settlement();
  std::size_t filled = 0;
  for (const auto& ord : r.orders) filled += ord.filled;
  f.push_back(r.variant);
  f.push_back(r.complete ? "true" : "false");
  f.push_back(r.error);
  f.push_back(s ? std::string{to_string(s->kind)} : "");
  f.push_back(s ? format_double(s->value) : "");
  f.push_back(std::to_string(r.liquidation_count()));
  f.push_back(format_double(r.bad_debt_total));
  f.push_back(format_double(r.conservation_residual()));
  f.push_back(std::to_string(filled));
  f.push_back(std::to_string(r.orders.size() - filled));
  return join_csv(f);
}

}  // namespace

BatchResult run_batch(const std::vector<BatchEntry>& entries, const fs::path& out_dir, ReportFormat format,
                      unsigned workers) {
  auto sorted = entries;
  std::stable_sort(sorted.begin(), sorted.end(), [](const BatchEntry& a, const BatchEntry& b) {
    const auto ra = a.risk.value_or(fs::path{});
    const auto rb = b.risk.value_or(fs::path{});
    return std::tie(a.seed, a.spec, a.data, ra) < std::tie(b.seed, b.spec, b.data, rb);
  });

  std::vector<RunOutcome> outcomes(sorted.size());
  std::vector<std::string> dirs(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%04zu", i);
    dirs[i] = name;
  }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < sorted.size(); i = next++) {
      try {
        outcomes[i].report = replay_files(sorted[i].spec, sorted[i].data, sorted[i].risk, sorted[i].seed);
        emit_report(*outcomes[i].report, format, out_dir / dirs[i]);
      } catch (const Error& e) {
        outcomes[i].error = std::string{to_string(e.code())} + ": " + e.what();
      }
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(sorted.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  BatchResult result;
  result.runs = sorted.size();
  result.aggregate_csv =
      "spec,data,risk,seed,report_dir,variant,complete,error,settlement_kind,settlement_value,liquidations,"
      "bad_debt_total,conservation_residual,orders_filled,orders_rejected\n";
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const bool ok = outcomes[i].report && outcomes[i].report->complete;
    result.failed += !ok;
    result.aggregate_csv += aggregate_row(sorted[i], dirs[i], outcomes[i]) + '\n';
  }
  write_file(out_dir / "aggregate.csv", result.aggregate_csv);
  return result;
}

}  // namespace evperp
