#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "goatrag/domain.hpp"
#include "goatrag/llm.hpp"

namespace goatrag::tablex {

struct Table {
  std::string id;
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> cells;  // row-major, m rows
  std::optional<std::string> caption;
  Domain domain = Domain::NutritionManagement;

  std::size_t row_count() const noexcept { return cells.size(); }
  std::size_t column_count() const noexcept { return headers.size(); }
};

struct CellEntry {
  std::string header;
  std::string value;
  std::size_t row = 0;
  std::size_t col = 0;
};

struct ValidatedTable {
  std::string source;
  std::size_t row_count = 0;
  std::size_t column_count = 0;
  std::vector<CellEntry> pairs;  // row-major

  std::span<const CellEntry> row(std::size_t i) const;
};

/// Keeps every (header, cell) pair whose header and cell are non-blank.
/// Throws RaggedTable, NoHeaders, or EmptyTable (no rows or columns).
ValidatedTable validate_table(const Table& t);

class SemanticParser {
 public:
  virtual ~SemanticParser() = default;
  // `entries` are the validated pairs of row `row_index`, ordered by column.
  virtual std::string describe_row(const ValidatedTable& vt, std::span<const CellEntry> entries,
                                   std::size_t row_index) const = 0;
};

/// "For <key>, <h2> is <v2>; ...; <hn> is <vn>." where the key is the
/// first-column value. A row holding only its key renders as "<h1> is <key>."
class TemplateParser final : public SemanticParser {
 public:
  std::string describe_row(const ValidatedTable& vt, std::span<const CellEntry> entries,
                           std::size_t row_index) const override;
};

/// Sends the template rendering plus the raw pairs to an LLM for rephrasing.
/// Backend failures surface as ParserUnavailable.
class LlmParser final : public SemanticParser {
 public:
  explicit LlmParser(const llm::Backend& backend) : backend_(backend) {}
  std::string describe_row(const ValidatedTable& vt, std::span<const CellEntry> entries,
                           std::size_t row_index) const override;

 private:
  const llm::Backend& backend_;
};

/// One statement per source row, in row order. Throws EmptyTable when `vt`
/// has no pairs.
std::vector<std::string> rowify(const ValidatedTable& vt, const SemanticParser& parser);

/// Whitespace normalization and exact-duplicate statement removal; statements
/// are joined one per line.
std::string post_process(const std::vector<std::string>& statements);

struct TableNarrative {
  std::string source;
  std::vector<std::string> row_statements;
  std::string unified_text;
};

TableNarrative textualize_table(const Table& t, const SemanticParser& parser);

struct CellCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const CellCoord&, const CellCoord&) = default;
};

struct PreservationReport {
  std::string source;
  std::vector<CellCoord> covered;
  std::vector<CellCoord> missing;
  bool pass = false;
};

/// A validated cell is covered when its normalized value occurs in the
/// normalized narrative as a contiguous token run, and so does its header. The
/// first column of a multi-column table is the row key ("For <key>, ..."), so
/// only its value is required.
PreservationReport check_semantic_preservation(const Table& t, std::string_view narrative);

/// Casefolded tokens with decimal numbers canonicalized. Used on both sides
/// of the containment check.
std::vector<std::string> normalized_tokens(std::string_view s);

/// "0.50" -> "0.5", "007" -> "7", "17.0" -> "17", "-0" -> "0". Returns
/// nullopt for anything that is not an optionally signed decimal literal.
std::optional<std::string> canonical_number(std::string_view s);

/// Delimiter-separated values with RFC 4180 quoting. The first record is the
/// header row and fixes the column count; any other record with a different
/// field count fails with RaggedTable naming its line.
Table parse_dsv(std::string_view content, char delimiter, std::string id, Domain domain,
                std::optional<std::string> caption = std::nullopt);

void to_json(nlohmann::json& j, const PreservationReport& r);

}  // namespace goatrag::tablex
