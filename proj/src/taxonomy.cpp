#include "evperp/taxonomy.hpp"

#include "evperp/error.hpp"

namespace evperp {

std::string_view to_symbol(Mark mark) {
  switch (mark) {
    case Mark::kApplies: return "✓";
    case Mark::kModified: return "~";
    case Mark::kAbsent: return "×";
  }
  return "?";
}

std::string TaxonomyCell::text() const { return std::string{to_symbol(mark)} + footnotes; }

namespace {

constexpr const char* kDagger = "†";
constexpr const char* kDoubleDagger = "‡";

TaxonomyCell Y(std::string fn = {}) { return {Mark::kApplies, std::move(fn)}; }
TaxonomyCell M(std::string fn = {}) { return {Mark::kModified, std::move(fn)}; }
TaxonomyCell N() { return {Mark::kAbsent, {}}; }

}  // namespace

const std::vector<InheritanceRow>& inheritance_table() {
  static const std::vector<InheritanceRow> rows = {
      {"Bounded-event process model", {Y("*"), Y("*"), Y("*"), M(), N(), M(), N()}},
      {"Terminal collapse property", {Y(), Y(), Y(), N(), N(), M(), N()}},
      {"Asymmetric depth (boundary > mid)", {Y(), Y(), M(), N(), N(), Y(kDagger), N()}},
      {"Oracle-mediated resolution", {Y(kDoubleDagger), Y(), Y(), M(), N(), Y(kDagger), N()}},
      {"Empirical Condition 1 (near-mid sparsity)", {Y(), Y(), Y(), N(), N(), Y(kDagger), N()}},
      {"Proposition 1 (collateral insufficiency)", {Y(), Y(), Y(), N(), N(), Y(kDagger), N()}},
      {"Proposition 2 (funding instability)", {Y(), Y(), M(), N(), N(), Y(kDagger), M()}},
      {"Index estimator", {M(), M(), M(), M(), M(), M(), M()}},
      {"Jump-aware tiered margin", {Y(), Y(), Y(), N(), N(), Y(kDagger), N()}},
      {"Leverage compression L_max(t)", {Y(), Y(), Y(), N(), N(), Y(kDagger), M()}},
      {"Resolution-zone protocol", {Y(), M(), M(), N(), N(), Y(kDagger), N()}},
      {"Eligibility framework", {Y(), Y(), Y(), M(), M(), Y(), Y()}},
  };
  return rows;
}

const std::vector<EvaluabilityRow>& evaluability_table() {
  static const std::vector<EvaluabilityRow> rows = {
      {'A', "Probability-index", "", Y(), Y(), Y(), Y(), "Fully evaluable", "Deployed"},
      {'B', "Conditional probability", "", M(), Y(), M(), Y(), "Partially evaluable", "Near-term"},
      {'C', "Event spread", "", Y(), Y(), M(), Y(), "Mostly evaluable", "Near-term"},
      {'D', "Event basket", "", Y(kDoubleDagger), Y(), M(), Y(), "Conditionally evaluable", "Near-term"},
      {'E', "Volatility / entropy", "", Y(), M("*"), N(), M(), "Partially evaluable", "Research"},
      {'F', "Liquidity index", "#", Y(), N(), N(), N(), "Not evaluable", "Research / speculative"},
      {'G', "Rolling event", "", Y(kDagger), M(), M(), Y(), "Multi-week required", "Near-term, data-dependent"},
      {'H', "Funding-only", "#", M(), N(), N(), N(), "Not evaluable", "Research / speculative"},
  };
  return rows;
}

TaxonomyTable taxonomy_table_from_string(std::string_view text) {
  if (text == "inheritance") return TaxonomyTable::kInheritance;
  if (text == "evaluability") return TaxonomyTable::kEvaluability;
  throw Error(ErrorCode::kConfigValue, "table", "expected inheritance or evaluability, got '" + std::string{text} + "'");
}

std::vector<std::vector<std::string>> taxonomy_grid(TaxonomyTable table) {
  std::vector<std::vector<std::string>> grid;
  if (table == TaxonomyTable::kInheritance) {
    grid.push_back({"Framework component"});
    for (char v : kInheritanceVariants) grid.back().push_back(std::string(1, v));
    for (const auto& row : inheritance_table()) {
      grid.push_back({row.component});
      for (const auto& cell : row.cells) grid.back().push_back(cell.text());
    }
  } else {
    grid.push_back({"Variant", "Underlying", "Settlement", "Liquidity", "Counterfactual", "Net evaluability", "Viability tier"});
    for (const auto& row : evaluability_table()) {
      std::string label = std::string(1, row.variant) + ". " + row.name;
      if (!row.name_footnotes.empty()) label += " " + row.name_footnotes;
      grid.push_back({label, row.underlying.text(), row.settlement.text(), row.liquidity.text(), row.counterfactual.text(),
                      row.net, row.tier});
    }
  }
  return grid;
}

namespace {

// display width: count code points, not bytes
std::size_t width(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

}  // namespace

std::string render_taxonomy(TaxonomyTable table) {
  const auto grid = taxonomy_grid(table);
  std::vector<std::size_t> widths(grid.front().size(), 0);
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], width(row[c]));
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += c == 0 ? "| " : " | ";
      out += row[c];
      out.append(widths[c] - width(row[c]), ' ');
    }
    out += " |\n";
  };
  emit(grid.front());
  for (std::size_t c = 0; c < widths.size(); ++c) {
    out += "|";
    out.append(widths[c] + 2, '-');
  }
  out += "|\n";
  for (std::size_t r = 1; r < grid.size(); ++r) emit(grid[r]);

  out += "\n";
  if (table == TaxonomyTable::kInheritance) {
    out += "✓ applies directly; ~ applies with per-variant modification; × does not apply.\n";
    out += "* per leg. † per constituent contract of the rolling structure. ‡ needs oracle composition rules.\n";
    out += "Variants: B conditional probability, C event spread, D event basket, E volatility / entropy,\n";
    out += "F liquidity index, G rolling event, H funding-only.\n";
  } else {
    out += "✓ criterion met; ~ partially met; × not met.\n";
    out += "* settlement is trivial for entropy and absent for variance.\n";
    out += "† holds per constituent; the rolling structure needs multi-event-cycle data.\n";
    out += "‡ only for a fixed membership, weighting, rebalancing and ordering specification.\n";
    out += "# research / speculative: deployment would move the underlying, so counterfactual replay is invalid.\n";
  }
  return out;
}

}  // namespace evperp
