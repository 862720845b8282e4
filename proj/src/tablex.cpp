#include "goatrag/tablex.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"
#include "goatrag/text.hpp"

namespace goatrag::tablex {

std::span<const CellEntry> ValidatedTable::row(std::size_t i) const {
  auto lo = std::lower_bound(pairs.begin(), pairs.end(), i,
                             [](const CellEntry& e, std::size_t r) { return e.row < r; });
  auto hi = std::upper_bound(lo, pairs.end(), i,
                             [](std::size_t r, const CellEntry& e) { return r < e.row; });
  return {pairs.data() + (lo - pairs.begin()), static_cast<std::size_t>(hi - lo)};
}

ValidatedTable validate_table(const Table& t) {
  const std::size_t n = t.column_count();
  for (std::size_t i = 0; i < t.cells.size(); ++i) {
    if (t.cells[i].size() != n) {
      throw Error(ErrorCode::RaggedTable,
                  "table '" + t.id + "' row " + std::to_string(i + 1) + " has " +
                      std::to_string(t.cells[i].size()) + " cells, expected " + std::to_string(n));
    }
  }
  if (std::all_of(t.headers.begin(), t.headers.end(),
                  [](const std::string& h) { return text::is_blank(h); })) {
    throw Error(ErrorCode::NoHeaders, "table '" + t.id + "' has no non-blank header");
  }
  if (t.cells.empty()) throw Error(ErrorCode::EmptyTable, "table '" + t.id + "' has no rows");

  ValidatedTable vt;
  vt.source = t.id;
  vt.row_count = t.row_count();
  vt.column_count = n;
  for (std::size_t i = 0; i < t.cells.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (text::is_blank(t.headers[j]) || text::is_blank(t.cells[i][j])) continue;
      vt.pairs.push_back({std::string(text::trim(t.headers[j])),
                          std::string(text::trim(t.cells[i][j])), i, j});
    }
  }
  return vt;
}

std::string TemplateParser::describe_row(const ValidatedTable&, std::span<const CellEntry> entries,
                                         std::size_t) const {
  if (entries.empty()) return {};
  const bool has_key = entries.front().col == 0;
  const auto rest = has_key ? entries.subspan(1) : entries;
  if (has_key && rest.empty()) return entries.front().header + " is " + entries.front().value + ".";
  std::string out;
  if (has_key) out = "For " + entries.front().value + ", ";
  for (std::size_t k = 0; k < rest.size(); ++k) {
    if (k) out += "; ";
    out += rest[k].header + " is " + rest[k].value;
  }
  out.push_back('.');
  return out;
}

std::string LlmParser::describe_row(const ValidatedTable& vt, std::span<const CellEntry> entries,
                                    std::size_t row_index) const {
  const std::string draft = TemplateParser{}.describe_row(vt, entries, row_index);
  if (draft.empty()) return draft;
  llm::ChatRequest req;
  req.purpose = llm::Purpose::RowDescription;
  req.system =
      "Rewrite the table row as one fluent sentence. Keep every header and every cell value "
      "verbatim; do not add facts.";
  std::string pairs;
  for (const auto& e : entries) pairs += "- " + e.header + ": " + e.value + "\n";
  req.user = "Row " + std::to_string(row_index + 1) + " of table " + vt.source + ":\n" + pairs +
             "Draft: " + draft;
  req.context = {draft};
  try {
    return text::collapse_whitespace(backend_.complete(req).text);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BackendUnavailable || e.code() == ErrorCode::Timeout) {
      throw Error(ErrorCode::ParserUnavailable, "semantic parser backend unavailable", e.what());
    }
    throw;
  }
}

std::vector<std::string> rowify(const ValidatedTable& vt, const SemanticParser& parser) {
  if (vt.pairs.empty()) {
    throw Error(ErrorCode::EmptyTable, "table '" + vt.source + "' has no valid cells");
  }
  std::vector<std::string> out;
  out.reserve(vt.row_count);
  for (std::size_t i = 0; i < vt.row_count; ++i) out.push_back(parser.describe_row(vt, vt.row(i), i));
  return out;
}

std::string post_process(const std::vector<std::string>& statements) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> kept;
  for (const auto& s : statements) {
    std::string norm = text::collapse_whitespace(s);
    if (norm.empty() || !seen.insert(norm).second) continue;
    kept.push_back(std::move(norm));
  }
  return text::join(kept, "\n");
}

TableNarrative textualize_table(const Table& t, const SemanticParser& parser) {
  const ValidatedTable vt = validate_table(t);
  TableNarrative out;
  out.source = t.id;
  out.row_statements = rowify(vt, parser);
  out.unified_text = post_process(out.row_statements);
  return out;
}

std::optional<std::string> canonical_number(std::string_view s) {
  s = text::trim(s);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  const auto dot = s.find('.');
  std::string_view int_part = s.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (int_part.empty() && frac_part.empty()) return std::nullopt;
  if (dot != std::string_view::npos && frac_part.empty()) return std::nullopt;
  auto all_digits = [](std::string_view v) {
    return std::all_of(v.begin(), v.end(), [](unsigned char c) { return std::isdigit(c); });
  };
  if (!all_digits(int_part) || !all_digits(frac_part)) return std::nullopt;

  while (int_part.size() > 1 && int_part.front() == '0') int_part.remove_prefix(1);
  while (!frac_part.empty() && frac_part.back() == '0') frac_part.remove_suffix(1);
  std::string out = int_part.empty() ? "0" : std::string(int_part);
  if (!frac_part.empty()) out += "." + std::string(frac_part);
  if (negative && out != "0") out.insert(out.begin(), '-');
  return out;
}

std::vector<std::string> normalized_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto digit = [&](std::size_t k) {
    return k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]));
  };
  auto wordish = [&](std::size_t k) {
    const auto c = static_cast<unsigned char>(s[k]);
    return std::isalpha(c) || c >= 0x80;
  };
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    const bool sign = c == '-' && digit(i + 1) &&
                      (i == 0 || !std::isalnum(static_cast<unsigned char>(s[i - 1])));
    if (std::isdigit(c) || sign) {
      std::size_t j = i + 1;
      while (digit(j)) ++j;
      if (j < s.size() && s[j] == '.' && digit(j + 1)) {
        j += 1;
        while (digit(j)) ++j;
      }
      out.push_back(*canonical_number(s.substr(i, j - i)));
      i = j;
      continue;
    }
    if (wordish(i)) {
      std::size_t j = i;
      while (j < s.size() && wordish(j)) ++j;
      out.push_back(text::to_lower_ascii(s.substr(i, j - i)));
      i = j;
      continue;
    }
    out.emplace_back(1, static_cast<char>(c));
    ++i;
  }
  return out;
}

namespace {

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty()) return true;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

PreservationReport check_semantic_preservation(const Table& t, std::string_view narrative) {
  PreservationReport report;
  report.source = t.id;
  const auto hay = normalized_tokens(narrative);
  ValidatedTable vt;
  try {
    vt = validate_table(t);
  } catch (const Error&) {
    report.pass = false;
    return report;
  }
  for (const auto& e : vt.pairs) {
    const bool key_column = e.col == 0 && vt.column_count > 1;
    const bool value_ok = contains_run(hay, normalized_tokens(e.value));
    const bool header_ok = key_column || contains_run(hay, normalized_tokens(e.header));
    (value_ok && header_ok ? report.covered : report.missing).push_back({e.row, e.col});
  }
  report.pass = report.missing.empty();
  return report;
}

Table parse_dsv(std::string_view content, char delimiter, std::string id, Domain domain,
                std::optional<std::string> caption) {
  const std::string src = text::normalize_line_endings(content);
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> record_lines;

  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  std::size_t line = 1;
  std::size_t record_line = 1;
  auto end_record = [&] {
    if (any || !field.empty() || !fields.empty()) {
      fields.push_back(std::move(field));
      records.push_back(std::move(fields));
      record_lines.push_back(record_line);
    }
    fields.clear();
    field.clear();
    any = false;
  };
  for (std::size_t i = 0; i < src.size(); ++i) {
    const char c = src[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < src.size() && src[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      in_quotes = true;
      any = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      end_record();
      ++line;
      record_line = line;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (in_quotes) {
    throw Error(ErrorCode::FormatError,
                "table '" + id + "' line " + std::to_string(record_line) + ": unterminated quote");
  }
  end_record();

  // Whitespace-only records (trailing blank lines) carry no data.
  std::vector<std::vector<std::string>> kept;
  std::vector<std::size_t> kept_lines;
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].size() == 1 && text::is_blank(records[r][0])) continue;
    kept.push_back(std::move(records[r]));
    kept_lines.push_back(record_lines[r]);
  }
  if (kept.empty()) throw Error(ErrorCode::NoHeaders, "table '" + id + "' has no header record");

  Table t;
  t.id = std::move(id);
  t.domain = domain;
  t.caption = std::move(caption);
  t.headers = std::move(kept.front());
  for (std::size_t r = 1; r < kept.size(); ++r) {
    if (kept[r].size() != t.headers.size()) {
      throw Error(ErrorCode::RaggedTable,
                  "table '" + t.id + "' line " + std::to_string(kept_lines[r]) + ": " +
                      std::to_string(kept[r].size()) + " fields, header has " +
                      std::to_string(t.headers.size()));
    }
    t.cells.push_back(std::move(kept[r]));
  }
  return t;
}

void to_json(nlohmann::json& j, const PreservationReport& r) {
  auto coords = [](const std::vector<CellCoord>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& c : v) a.push_back({c.row, c.col});
    return a;
  };
  j = {{"source", r.source}, {"pass", r.pass}, {"covered", coords(r.covered)},
       {"missing", coords(r.missing)}};
}

}  // namespace goatrag::tablex
