#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace evperp {

enum class Mark { kApplies, kModified, kAbsent };  // ✓ ~ ×

std::string_view to_symbol(Mark mark);

/// A grid cell: mark plus footnote markers drawn from * † ‡ #.
struct TaxonomyCell {
  Mark mark{Mark::kAbsent};
  std::string footnotes;

  [[nodiscard]] std::string text() const;
  friend bool operator==(const TaxonomyCell&, const TaxonomyCell&) = default;
};

inline constexpr std::array<char, 7> kInheritanceVariants{'B', 'C', 'D', 'E', 'F', 'G', 'H'};

struct InheritanceRow {
  std::string component;
  std::array<TaxonomyCell, 7> cells;  // B..H
};

struct EvaluabilityRow {
  char variant{'A'};
  std::string name;
  std::string name_footnotes;
  TaxonomyCell underlying;
  TaxonomyCell settlement;
  TaxonomyCell liquidity;
  TaxonomyCell counterfactual;
  std::string net;
  std::string tier;
};

/// 12 framework components against variants B..H.
const std::vector<InheritanceRow>& inheritance_table();
/// Variants A..H against the four evaluability criteria, net verdict and tier.
const std::vector<EvaluabilityRow>& evaluability_table();

enum class TaxonomyTable { kInheritance, kEvaluability };

TaxonomyTable taxonomy_table_from_string(std::string_view text);

/// Pipe-separated rows (header first), then a legend for marks and
/// footnotes. Cells never contain '|', so the grid parses back with a split.
std::string render_taxonomy(TaxonomyTable table);

/// Header plus one row per table row, as rendered cell strings.
std::vector<std::vector<std::string>> taxonomy_grid(TaxonomyTable table);

}  // namespace evperp
