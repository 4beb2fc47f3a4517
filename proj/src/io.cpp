#include "evperp/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "evperp/error.hpp"

namespace evperp {

namespace fs = std::filesystem;

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string{field};
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string join_csv(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_escape(fields[i]);
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& field) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kSchemaMismatch, field, "not a number: '" + std::string{text} + "'");
  }
  return x;
}

std::int64_t parse_int(std::string_view text, const std::string& field) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  std::int64_t x = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kSchemaMismatch, field, "not an integer: '" + std::string{text} + "'");
  }
  return x;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, path.string(), "cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, path.string(), "write failed");
}

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, path.string(), "cannot open for reading");
  return in;
}

std::string where(const std::string& source, std::size_t row, std::string_view column = {}) {
  std::string out = source + " row " + std::to_string(row);
  if (!column.empty()) out += " column " + std::string{column};
  return out;
}

/// Reads the header and maps column names to positions.
struct Table {
  std::vector<std::string> header;
  std::map<std::string, std::size_t, std::less<>> index;

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

Table read_header(std::istream& in, const std::string& source, const std::vector<std::string>& required,
                  const std::vector<std::string>& optional) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kSchemaMismatch, source, "missing header row");
  Table t;
  t.header = split_csv_line(line);
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    const auto& name = t.header[i];
    const bool known = std::count(required.begin(), required.end(), name) ||
                       std::count(optional.begin(), optional.end(), name);
    if (!known) throw Error(ErrorCode::kSchemaMismatch, where(source, 1, name), "unknown column");
    if (!t.index.emplace(name, i).second) throw Error(ErrorCode::kSchemaMismatch, where(source, 1, name), "duplicate column");
  }
  for (const auto& name : required) {
    if (!t.index.count(name)) throw Error(ErrorCode::kSchemaMismatch, where(source, 1, name), "missing column");
  }
  // fixed-layout files are read positionally
  if (optional.empty() && t.header != required) {
    throw Error(ErrorCode::kSchemaMismatch, where(source, 1), "columns out of order");
  }
  return t;
}

template <typename Fn>
void for_each_row(std::istream& in, const Table& table, const std::string& source, Fn&& fn) {
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != table.header.size()) {
      throw Error(ErrorCode::kSchemaMismatch, where(source, row), "expected " + std::to_string(table.header.size()) +
                                                                      " fields, got " + std::to_string(fields.size()));
    }
    fn(fields, row);
  }
}

}  // namespace

std::map<LegId, LegSeries> parse_leg_series(std::istream& in, const std::string& source) {
  const auto table = read_header(in, source, {"t_ms", "mid"},
                                 {"leg_id", "bid", "ask", "half_spread", "depth_200bps", "volume"});
  const auto t_col = *table.find("t_ms");
  const auto mid_col = *table.find("mid");
  const auto id_col = table.find("leg_id");
  // without a leg_id column the whole file is one leg named after the source
  std::string default_id = source;
  if (default_id.size() > 4 && default_id.ends_with(".csv")) default_id.resize(default_id.size() - 4);
  const auto bid = table.find("bid");
  const auto ask = table.find("ask");
  const auto half = table.find("half_spread");
  const auto depth = table.find("depth_200bps");
  const auto volume = table.find("volume");
  const bool derive_half = !half && bid && ask;

  std::map<LegId, LegSeries> out;
  for_each_row(in, table, source, [&](const std::vector<std::string>& f, std::size_t row) {
    const TimeMs t = parse_int(f[t_col], where(source, row, "t_ms"));
    const LegId& id = id_col ? f[*id_col] : default_id;
    if (id.empty()) throw Error(ErrorCode::kSchemaMismatch, where(source, row, "leg_id"), "empty leg id");
    const double mid = parse_double(f[mid_col], where(source, row, "mid"));
    if (!(mid >= 0.0 && mid <= 1.0)) throw Error(ErrorCode::kBoundViolation, where(source, row, "mid"), "outside [0,1]");
    auto& leg = out[id];
    leg.leg_id = id;
    if (!leg.points.empty() && t <= leg.points.back().time) {
      throw Error(ErrorCode::kSchemaMismatch, where(source, row, "t_ms"), "timestamps not increasing for leg " + id);
    }
    auto column = [&](std::optional<std::size_t> col, std::optional<std::vector<double>>& dst, const char* name) {
      if (!col) return;
      // a blank cell means the leg lacks the column; mixing is an error
      const bool blank = f[*col].empty();
      const std::size_t before = leg.points.size() - 1;
      if (blank ? dst.has_value() : (dst ? dst->size() != before : before != 0)) {
        throw Error(ErrorCode::kSchemaMismatch, where(source, row, name), "column filled on some rows of leg " + id);
      }
      if (blank) return;
      const double v = parse_double(f[*col], where(source, row, name));
      if (!(v >= 0.0)) throw Error(ErrorCode::kBoundViolation, where(source, row, name), "negative value");
      if (!dst) dst.emplace();
      dst->push_back(v);
    };
    if (bid || ask) {
      for (auto col : {bid, ask}) {
        if (!col) continue;
        const double v = parse_double(f[*col], where(source, row, table.header[*col]));
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::kBoundViolation, where(source, row, table.header[*col]), "outside [0,1]");
      }
    }
    leg.points.push_back({t, mid});
    column(half, leg.half_spread, "half_spread");
    column(depth, leg.depth_200bps, "depth_200bps");
    column(volume, leg.volume, "volume");
    if (derive_half) {
      const double b = parse_double(f[*bid], where(source, row, "bid"));
      const double a = parse_double(f[*ask], where(source, row, "ask"));
      if (a < b) throw Error(ErrorCode::kBoundViolation, where(source, row, "ask"), "ask below bid");
      if (!leg.half_spread) leg.half_spread.emplace();
      leg.half_spread->push_back(0.5 * (a - b));
    }
  });
  return out;
}

std::map<LegId, LegSeries> load_leg_series(const fs::path& path) {
  auto in = open_input(path);
  return parse_leg_series(in, path.filename().string());
}

std::map<LegId, ResolutionRecord> parse_resolutions(std::istream& in, const std::string& source) {
  const auto table = read_header(in, source, {"leg_id", "tau_ms", "outcome"}, {});
  std::map<LegId, ResolutionRecord> out;
  for_each_row(in, table, source, [&](const std::vector<std::string>& f, std::size_t row) {
    const TimeMs tau = parse_int(f[1], where(source, row, "tau_ms"));
    const std::string& text = f[2];
    if (text != "0" && text != "1") {
      throw Error(ErrorCode::kOutcomeNotBinary, where(source, row, "outcome"), "got '" + text + "'");
    }
    if (!out.emplace(f[0], ResolutionRecord{tau, text == "1" ? 1 : 0}).second) {
      throw Error(ErrorCode::kDuplicateLeg, where(source, row, "leg_id"), f[0]);
    }
  });
  return out;
}

std::map<LegId, ResolutionRecord> load_resolutions(const fs::path& path) {
  auto in = open_input(path);
  return parse_resolutions(in, path.filename().string());
}

std::vector<NegRiskGroup> parse_negrisk_groups(std::istream& in, const std::string& source) {
  const auto table = read_header(in, source, {"group_id", "leg_id"}, {});
  std::vector<NegRiskGroup> out;
  for_each_row(in, table, source, [&](const std::vector<std::string>& f, std::size_t row) {
    auto it = std::find_if(out.begin(), out.end(), [&](const NegRiskGroup& g) { return g.group_id == f[0]; });
    if (it == out.end()) {
      out.push_back({f[0], {}});
      it = std::prev(out.end());
    }
    if (std::count(it->members.begin(), it->members.end(), f[1])) {
      throw Error(ErrorCode::kDuplicateLeg, where(source, row, "leg_id"), f[1]);
    }
    it->members.push_back(f[1]);
  });
  return out;
}

std::vector<NegRiskGroup> load_negrisk_groups(const fs::path& path) {
  auto in = open_input(path);
  return parse_negrisk_groups(in, path.filename().string());
}

std::vector<TraderOrder> parse_orders(std::istream& in, const std::string& source) {
  const auto table = read_header(in, source, {"t_ms", "trader_id", "side", "notional", "leverage"}, {});
  std::vector<TraderOrder> out;
  for_each_row(in, table, source, [&](const std::vector<std::string>& f, std::size_t row) {
    TraderOrder o;
    o.time = parse_int(f[0], where(source, row, "t_ms"));
    o.trader_id = f[1];
    try {
      o.side = side_from_string(f[2]);
    } catch (const Error&) {
      throw Error(ErrorCode::kSchemaMismatch, where(source, row, "side"), "expected long or short");
    }
    o.notional = parse_double(f[3], where(source, row, "notional"));
    o.leverage = parse_double(f[4], where(source, row, "leverage"));
    out.push_back(std::move(o));
  });
  return out;
}

std::vector<TraderOrder> load_orders(const fs::path& path) {
  auto in = open_input(path);
  return parse_orders(in, path.filename().string());
}

MarketData load_market_data(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIoFailure, dir.string(), "not a directory");
  MarketData data;
  data.legs = load_leg_series(dir / kTicksFile);
  if (fs::exists(dir / kResolutionsFile)) {
    for (const auto& [id, record] : load_resolutions(dir / kResolutionsFile)) {
      auto it = data.legs.find(id);
      if (it == data.legs.end()) throw Error(ErrorCode::kMissingLeg, id, "resolution for a leg with no ticks");
      it->second.resolution = record;
    }
  }
  if (fs::exists(dir / kNegRiskFile)) data.groups = load_negrisk_groups(dir / kNegRiskFile);
  return data;
}

std::vector<TraderOrder> load_orders_if_present(const fs::path& dir) {
  if (!fs::exists(dir / kOrdersFile)) return {};
  return load_orders(dir / kOrdersFile);
}

void write_market_data(const fs::path& dir, const MarketData& data) {
  bool half = false, depth = false, volume = false;
  for (const auto& [id, leg] : data.legs) {
    half = half || leg.half_spread.has_value();
    depth = depth || leg.depth_200bps.has_value();
    volume = volume || leg.volume.has_value();
  }
  std::string ticks = "t_ms,leg_id,mid";
  if (half) ticks += ",half_spread";
  if (depth) ticks += ",depth_200bps";
  if (volume) ticks += ",volume";
  ticks += '\n';
  auto col = [](const std::optional<std::vector<double>>& c, std::size_t i) {
    return c ? format_double((*c)[i]) : std::string{};
  };
  std::string resolutions = "leg_id,tau_ms,outcome\n";
  for (const auto& [id, leg] : data.legs) {
    for (std::size_t i = 0; i < leg.points.size(); ++i) {
      std::vector<std::string> f{std::to_string(leg.points[i].time), id, format_double(leg.points[i].value)};
      if (half) f.push_back(col(leg.half_spread, i));
      if (depth) f.push_back(col(leg.depth_200bps, i));
      if (volume) f.push_back(col(leg.volume, i));
      ticks += join_csv(f) + '\n';
    }
    if (leg.resolution) {
      resolutions += join_csv({id, std::to_string(leg.resolution->tau), std::to_string(leg.resolution->outcome)}) + '\n';
    }
  }
  write_file(dir / kTicksFile, ticks);
  write_file(dir / kResolutionsFile, resolutions);
  if (!data.groups.empty()) {
    std::string groups = "group_id,leg_id\n";
    for (const auto& g : data.groups) {
      for (const auto& m : g.members) groups += join_csv({g.group_id, m}) + '\n';
    }
    write_file(dir / kNegRiskFile, groups);
  }
}

}  // namespace evperp
