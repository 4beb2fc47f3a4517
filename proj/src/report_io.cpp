#include "evperp/report_io.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

#include "evperp/error.hpp"
#include "evperp/io.hpp"

namespace evperp {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string_view to_string(ReportFormat format) {
  return format == ReportFormat::kJsonl ? "jsonl" : "csv-bundle";
}

ReportFormat report_format_from_string(std::string_view text) {
  if (text == "jsonl") return ReportFormat::kJsonl;
  if (text == "csv-bundle") return ReportFormat::kCsvBundle;
  throw Error(ErrorCode::kConfigValue, "format", "expected jsonl or csv-bundle, got '" + std::string{text} + "'");
}

namespace {

// Each record type maps to one flat JSON object. The CSV bundle reuses the
// same objects, so both formats share field names and order.

Json to_json(const IndexTick& r) {
  return Json{{"time", r.time}, {"index", r.index}, {"mark", r.mark}, {"gap", r.gap}};
}
Json to_json(const FundingRecord& r) {
  return Json{{"time", r.time}, {"rate", r.rate}, {"trader_transfers", r.trader_transfers}};
}
Json to_json(const LiquidationRecord& r) {
  return Json{{"time", r.time},           {"trader_id", r.trader_id},   {"side", to_string(r.side)},
              {"notional", r.notional},   {"fill_price", r.fill_price}, {"equity_at_fill", r.equity_at_fill},
              {"shortfall", r.shortfall}};
}
Json to_json(const OrderRecord& r) {
  return Json{{"time", r.time},         {"trader_id", r.trader_id}, {"side", to_string(r.side)},
              {"notional", r.notional}, {"leverage", r.leverage},   {"filled", r.filled},
              {"reason", r.reason}};
}
Json to_json(const HaltWindow& r) {
  return Json{{"start", r.start}, {"end", r.end}, {"triggering_leg", r.triggering_leg}, {"stage", to_string(r.stage)}};
}
Json to_json(const RollRecord& r) {
  return Json{{"time", r.time},
              {"from_constituent", r.from_constituent},
              {"to_constituent", r.to_constituent},
              {"lambda_before", r.lambda_before},
              {"lambda_after", r.lambda_after},
              {"value_before", r.value_before},
              {"value_after", r.value_after},
              {"rule", to_string(r.rule)},
              {"realized_basis", r.realized_basis},
              {"cash", r.cash}};
}
Json to_json(const Discontinuity& r) {
  return Json{{"time", r.time}, {"pre", r.pre}, {"post", r.post}, {"cause", r.cause}};
}
Json to_json(const SettlementRecord& r) {
  return Json{{"time", r.time},
              {"kind", to_string(r.kind)},
              {"value", r.value},
              {"triggering_leg", r.triggering_leg ? Json(*r.triggering_leg) : Json(nullptr)},
              {"rule_applied", r.rule_applied}};
}

template <typename T>
T field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::kSchemaMismatch, key, "missing field");
  try {
    return it->template get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, key, e.what());
  }
}

void from_json_record(const Json& j, IndexTick& r) {
  r = {field<TimeMs>(j, "time"), field<double>(j, "index"), field<double>(j, "mark"), field<bool>(j, "gap")};
}
void from_json_record(const Json& j, FundingRecord& r) {
  r = {field<TimeMs>(j, "time"), field<double>(j, "rate"), field<double>(j, "trader_transfers")};
}
void from_json_record(const Json& j, LiquidationRecord& r) {
  r = {field<TimeMs>(j, "time"),        field<std::string>(j, "trader_id"),
       side_from_string(field<std::string>(j, "side")), field<double>(j, "notional"),
       field<double>(j, "fill_price"),  field<double>(j, "equity_at_fill"),
       field<double>(j, "shortfall")};
}
void from_json_record(const Json& j, OrderRecord& r) {
  r = {field<TimeMs>(j, "time"),   field<std::string>(j, "trader_id"), side_from_string(field<std::string>(j, "side")),
       field<double>(j, "notional"), field<double>(j, "leverage"),      field<bool>(j, "filled"),
       field<std::string>(j, "reason")};
}
void from_json_record(const Json& j, HaltWindow& r) {
  r = {field<TimeMs>(j, "start"), field<TimeMs>(j, "end"), field<std::string>(j, "triggering_leg"),
       halt_stage_from_string(field<std::string>(j, "stage"))};
}
void from_json_record(const Json& j, RollRecord& r) {
  r = {field<TimeMs>(j, "time"),
       field<std::size_t>(j, "from_constituent"),
       field<std::size_t>(j, "to_constituent"),
       field<double>(j, "lambda_before"),
       field<double>(j, "lambda_after"),
       field<double>(j, "value_before"),
       field<double>(j, "value_after"),
       roll_basis_rule_from_string(field<std::string>(j, "rule")),
       field<double>(j, "realized_basis"),
       field<double>(j, "cash")};
}
void from_json_record(const Json& j, Discontinuity& r) {
  r = {field<TimeMs>(j, "time"), field<double>(j, "pre"), field<double>(j, "post"), field<std::string>(j, "cause")};
}
void from_json_record(const Json& j, SettlementRecord& r) {
  r.time = field<TimeMs>(j, "time");
  r.kind = settlement_kind_from_string(field<std::string>(j, "kind"));
  r.value = field<double>(j, "value");
  const auto& leg = j.at("triggering_leg");
  r.triggering_leg = leg.is_null() ? std::nullopt : std::optional<LegId>(leg.get<std::string>());
  r.rule_applied = field<std::string>(j, "rule_applied");
}

Json meta_json(const ReplayReport& r) {
  return Json{{"variant", r.variant},
              {"seed", r.seed},
              {"complete", r.complete},
              {"error", r.error},
              {"halts_enforced", r.halts_enforced},
              {"caveats", r.caveats},
              {"warnings", r.warnings},
              {"settlement_weights", r.settlement_weights}};
}

void read_meta(const Json& j, ReplayReport& r) {
  r.variant = field<std::string>(j, "variant");
  r.seed = field<std::uint64_t>(j, "seed");
  r.complete = field<bool>(j, "complete");
  r.error = field<std::string>(j, "error");
  r.halts_enforced = field<bool>(j, "halts_enforced");
  r.caveats = field<std::vector<std::string>>(j, "caveats");
  r.warnings = field<std::vector<std::string>>(j, "warnings");
  r.settlement_weights = field<std::vector<double>>(j, "settlement_weights");
}

Json summary_json(const ReplayReport& r) {
  // residual and liquidation count are derived; written for readers, ignored on parse
  return Json{{"bad_debt_total", r.bad_debt_total},
              {"trader_equity_change", r.trader_equity_change},
              {"pool_change", r.pool_change},
              {"price_updates", r.price_updates},
              {"orders_filled_in_halt_windows", r.orders_filled_in_halt_windows},
              {"liquidation_count", r.liquidation_count()},
              {"conservation_residual", r.conservation_residual()}};
}

void read_summary(const Json& j, ReplayReport& r) {
  r.bad_debt_total = field<double>(j, "bad_debt_total");
  r.trader_equity_change = field<double>(j, "trader_equity_change");
  r.pool_change = field<double>(j, "pool_change");
  r.price_updates = field<std::size_t>(j, "price_updates");
  r.orders_filled_in_halt_windows = field<std::size_t>(j, "orders_filled_in_halt_windows");
}

/// Visits every series with its record name and csv file name.
template <typename Report, typename Fn>
void for_each_series(Report& r, Fn&& fn) {
  fn("tick", "ticks.csv", r.ticks);
  fn("funding", "funding.csv", r.funding);
  fn("liquidation", "liquidations.csv", r.liquidations);
  fn("order", "orders.csv", r.orders);
  fn("halt", "halts.csv", r.halt_windows);
  fn("roll", "rolls.csv", r.rolls);
  fn("discontinuity", "discontinuities.csv", r.discontinuities);
  fn("settlement", "settlements.csv", r.settlements);
}

// --- CSV bundle ----------------------------------------------------------

std::string scalar_to_text(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw Error(ErrorCode::kSchemaMismatch, "csv", "non-scalar field");
}

/// Parses text into the JSON type the schema value has. A null schema slot
/// means an optional string.
Json text_to_scalar(const std::string& text, const Json& schema, const std::string& where) {
  if (schema.is_null()) return text.empty() ? Json(nullptr) : Json(text);
  if (schema.is_string()) return text;
  if (schema.is_boolean()) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw Error(ErrorCode::kSchemaMismatch, where, "expected true or false");
  }
  if (schema.is_number_float()) return parse_double(text, where);
  if (schema.is_number_unsigned()) {
    const auto x = parse_int(text, where);
    if (x < 0) throw Error(ErrorCode::kSchemaMismatch, where, "negative count");
    return static_cast<std::uint64_t>(x);
  }
  return parse_int(text, where);
}

std::string record_csv_header(const Json& schema) {
  std::vector<std::string> names;
  for (auto it = schema.begin(); it != schema.end(); ++it) names.push_back(it.key());
  return join_csv(names) + '\n';
}

template <typename T>
std::string series_to_csv(const std::vector<T>& rows) {
  std::string out = record_csv_header(to_json(T{}));
  for (const auto& row : rows) {
    std::vector<std::string> fields;
    for (const auto& v : to_json(row)) fields.push_back(scalar_to_text(v));
    out += join_csv(fields) + '\n';
  }
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

template <typename T>
std::vector<T> series_from_csv(const std::string& text, const std::string& name) {
  const Json schema = to_json(T{});
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() + '\n' != record_csv_header(schema)) {
    throw Error(ErrorCode::kSchemaMismatch, name + " row 1", "unexpected header");
  }
  std::vector<T> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != schema.size()) throw Error(ErrorCode::kSchemaMismatch, name + " row " + std::to_string(i + 1), "field count");
    Json j = Json::object();
    std::size_t c = 0;
    for (auto it = schema.begin(); it != schema.end(); ++it, ++c) {
      j[it.key()] = text_to_scalar(fields[c], it.value(), name + " row " + std::to_string(i + 1) + " column " + it.key());
    }
    T rec;
    from_json_record(j, rec);
    out.push_back(std::move(rec));
  }
  return out;
}

/// key,value rows; arrays become one row per element.
std::string object_to_kv_csv(const Json& obj) {
  std::string out = "key,value\n";
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (it.value().is_array()) {
      for (const auto& v : it.value()) out += join_csv({it.key(), scalar_to_text(v)}) + '\n';
    } else {
      out += join_csv({it.key(), scalar_to_text(it.value())}) + '\n';
    }
  }
  return out;
}

Json object_from_kv_csv(const std::string& text, const Json& schema, const std::string& name) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != "key,value") throw Error(ErrorCode::kSchemaMismatch, name + " row 1", "unexpected header");
  Json out = Json::object();
  for (auto it = schema.begin(); it != schema.end(); ++it) {
    if (it.value().is_array()) out[it.key()] = Json::array();
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    const std::string where = name + " row " + std::to_string(i + 1);
    if (f.size() != 2) throw Error(ErrorCode::kSchemaMismatch, where, "field count");
    auto slot = schema.find(f[0]);
    if (slot == schema.end()) throw Error(ErrorCode::kSchemaMismatch, where, "unknown key " + f[0]);
    if (slot->is_array()) {
      // element type: strings except for the weights list
      const Json elem = f[0] == "settlement_weights" ? Json(0.0) : Json(std::string{});
      out[f[0]].push_back(text_to_scalar(f[1], elem, where));
    } else {
      out[f[0]] = text_to_scalar(f[1], *slot, where);
    }
  }
  return out;
}

}  // namespace

std::string report_to_jsonl(const ReplayReport& report) {
  std::string out;
  auto line = [&](const char* type, Json body) {
    Json j{{"type", type}};
    for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
    out += j.dump() + '\n';
  };
  line("meta", meta_json(report));
  for_each_series(report, [&](const char* type, const char*, const auto& rows) {
    for (const auto& row : rows) line(type, to_json(row));
  });
  line("summary", summary_json(report));
  return out;
}

ReplayReport report_from_jsonl(std::string_view text) {
  ReplayReport r;
  bool saw_meta = false, saw_summary = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kSchemaMismatch, "report line " + std::to_string(line_no), e.what());
    }
    const auto type = field<std::string>(j, "type");
    if (type == "meta") {
      read_meta(j, r);
      saw_meta = true;
    } else if (type == "summary") {
      read_summary(j, r);
      saw_summary = true;
    } else {
      bool matched = false;
      for_each_series(r, [&](const char* name, const char*, auto& rows) {
        if (type != name) return;
        typename std::decay_t<decltype(rows)>::value_type rec;
        from_json_record(j, rec);
        rows.push_back(std::move(rec));
        matched = true;
      });
      if (!matched) throw Error(ErrorCode::kSchemaMismatch, "report line " + std::to_string(line_no), "unknown type " + type);
    }
  }
  if (!saw_meta || !saw_summary) throw Error(ErrorCode::kSchemaMismatch, "report", "missing meta or summary record");
  return r;
}

void emit_report(const ReplayReport& report, ReportFormat format, const fs::path& dir) {
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::kIoFailure, dir.string(), e.what());
  }
  if (format == ReportFormat::kJsonl) {
    write_file(dir / kReportJsonlFile, report_to_jsonl(report));
    return;
  }
  write_file(dir / "meta.csv", object_to_kv_csv(meta_json(report)));
  for_each_series(report, [&](const char*, const char* file, const auto& rows) { write_file(dir / file, series_to_csv(rows)); });
  write_file(dir / "summary.csv", object_to_kv_csv(summary_json(report)));
}

ReplayReport parse_report(ReportFormat format, const fs::path& dir) {
  if (format == ReportFormat::kJsonl) return report_from_jsonl(read_file(dir / kReportJsonlFile));
  ReplayReport r;
  read_meta(object_from_kv_csv(read_file(dir / "meta.csv"), meta_json(ReplayReport{}), "meta.csv"), r);
  for_each_series(r, [&](const char*, const char* file, auto& rows) {
    using T = typename std::decay_t<decltype(rows)>::value_type;
    rows = series_from_csv<T>(read_file(dir / file), file);
  });
  read_summary(object_from_kv_csv(read_file(dir / "summary.csv"), summary_json(ReplayReport{}), "summary.csv"), r);
  return r;
}

std::string index_series_to_csv(const IndexSeries& series) {
  std::string out = "t_ms,value,gap\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += std::to_string(series.times[i]) + ',' + format_double(series.values[i]) + ',' +
           (series.gaps[i] ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace evperp
