#include "goatrag/corpus.hpp"

#include <cctype>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"
#include "goatrag/text.hpp"

namespace goatrag::corpus {

using nlohmann::json;

Document ingest_document(std::string_view raw, DocumentMeta meta) {
  if (text::is_blank(raw)) {
    throw Error(ErrorCode::EmptyDocument,
                "document '" + (meta.provenance.empty() ? meta.title : meta.provenance) +
                    "' is blank");
  }
  Document doc;
  doc.body = text::normalize_line_endings(raw);
  doc.title = std::move(meta.title);
  doc.domain = meta.domain;
  doc.kind = meta.kind;
  doc.provenance = std::move(meta.provenance);
  if (meta.id && !meta.id->empty()) {
    doc.id = std::move(*meta.id);
  } else {
    std::string key;
    key.append(to_string(doc.kind)).push_back('\x1f');
    key.append(doc.title).push_back('\x1f');
    key.append(doc.body);
    doc.id = "doc-" + text::hex64(text::fnv1a(key));
  }
  return doc;
}

bool is_subheading(std::string_view line) {
  const std::string_view t = text::trim(line);
  if (t.empty() || t.size() > 80) return false;
  const char last = t.back();
  if (last == '.' || last == '!' || last == '?') return false;
  bool has_letter = false;
  for (char ch : t) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::islower(c)) return false;
    if (std::isupper(c)) has_letter = true;
  }
  return has_letter;
}

namespace {

Chunk make_chunk(const Document& doc, std::size_t ordinal, std::optional<std::string> heading,
                 std::string body) {
  Chunk c;
  c.id = doc.id + "#" + std::to_string(ordinal);
  c.doc_id = doc.id;
  c.heading = std::move(heading);
  c.term_count = text::tokenize(body).size();
  c.text = std::move(body);
  c.ordinal = ordinal;
  return c;
}

std::string join_lines(const std::vector<std::string_view>& lines, std::size_t b, std::size_t e) {
  std::string out;
  for (std::size_t i = b; i < e; ++i) {
    if (i > b) out.push_back('\n');
    out.append(lines[i]);
  }
  return out;
}

}  // namespace

std::vector<Chunk> segment_by_subheadings(const Document& doc) {
  const auto lines = text::split_lines(doc.body);
  std::vector<std::size_t> headings;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_subheading(lines[i])) headings.push_back(i);
  }

  std::vector<Chunk> chunks;
  if (headings.empty()) {
    chunks.push_back(make_chunk(doc, 0, std::nullopt, doc.body));
    return chunks;
  }

  std::vector<std::size_t> starts = headings;
  const std::string preamble = join_lines(lines, 0, headings.front());
  if (headings.front() > 0) {
    if (text::is_blank(preamble)) {
      starts.front() = 0;
    } else {
      chunks.push_back(make_chunk(doc, 0, std::nullopt, preamble));
    }
  }
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::size_t end = k + 1 < starts.size() ? starts[k + 1] : lines.size();
    chunks.push_back(make_chunk(doc, chunks.size(), std::string(text::trim(lines[headings[k]])),
                                join_lines(lines, starts[k], end)));
  }
  return chunks;
}

std::vector<Chunk> chunk_document(const Document& doc) {
  if (doc.kind == SourceKind::Article) return segment_by_subheadings(doc);
  std::vector<Chunk> chunks;
  std::string para;
  auto flush = [&] {
    if (!text::is_blank(para)) chunks.push_back(make_chunk(doc, chunks.size(), std::nullopt,
                                                           std::string(text::trim(para))));
    para.clear();
  };
  for (auto line : text::split_lines(doc.body)) {
    if (text::is_blank(line)) {
      flush();
      continue;
    }
    if (!para.empty()) para.push_back('\n');
    para.append(line);
  }
  flush();
  return chunks;
}

std::string reconstruct_body(const std::vector<Chunk>& chunks) {
  std::string out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (i) out.push_back('\n');
    out.append(chunks[i].text);
  }
  return out;
}

std::vector<std::size_t> oversized_chunks(const std::vector<Chunk>& chunks, std::size_t max_terms) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (chunks[i].term_count > max_terms) out.push_back(i);
  }
  return out;
}

const Document& Corpus::add(Document doc) {
  if (by_id_.count(doc.id)) {
    throw Error(ErrorCode::DuplicateId, "document id '" + doc.id + "' already in corpus",
                doc.provenance);
  }
  by_id_.emplace(doc.id, docs_.size());
  docs_.push_back(std::move(doc));
  return docs_.back();
}

const Document& Corpus::ingest(std::string_view raw, DocumentMeta meta) {
  return add(ingest_document(raw, std::move(meta)));
}

const Document* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

std::size_t DatasetCounts::total(const Row& r) {
  std::size_t s = 0;
  for (auto v : r) s += v;
  return s;
}

namespace {

DatasetCounts::Row sum_rows(const std::array<DatasetCounts::Row, 3>& rows) {
  DatasetCounts::Row out{};
  for (const auto& r : rows) {
    for (std::size_t d = 0; d < r.size(); ++d) out[d] += r[d];
  }
  return out;
}

std::size_t domain_index(Domain d) { return static_cast<std::size_t>(d); }

}  // namespace

DatasetCounts::Row DatasetCounts::train_total() const { return sum_rows(train); }
DatasetCounts::Row DatasetCounts::validation_total() const { return sum_rows(validation); }

DatasetSplit assemble_dataset(const DatasetInput& input) {
  std::unordered_set<std::string> known(input.extra_source_ids.begin(),
                                        input.extra_source_ids.end());
  for (const auto& doc : input.documents) {
    known.insert(doc.id);
    for (const auto& c : chunk_document(doc)) known.insert(c.id);
  }

  DatasetSplit split;
  for (const auto& doc : input.documents) {
    split.train[doc.kind].push_back(doc);
    split.counts.train[static_cast<std::size_t>(doc.kind)][domain_index(doc.domain)]++;
  }

  std::unordered_set<std::string> seen;
  auto check = [&](const QAPair& p) {
    if (!seen.insert(p.id).second) {
      throw Error(ErrorCode::DuplicateId, "Q&A pair '" + p.id + "' appears more than once");
    }
    for (const auto& ref : p.source_refs) {
      if (!known.count(ref)) {
        throw Error(ErrorCode::DanglingReference,
                    "Q&A pair '" + p.id + "' cites missing source '" + ref + "'");
      }
    }
  };
  for (const auto& p : input.validation) {
    check(p);
    if (p.kind == QAKind::Novel) {
      throw Error(ErrorCode::FormatError,
                  "Q&A pair '" + p.id + "' is novel-kind and may only appear in the test split");
    }
    split.validation[p.kind].push_back(p);
    split.counts.validation[static_cast<std::size_t>(p.kind)][domain_index(p.domain)]++;
  }
  for (const auto& p : input.test) {
    check(p);
    split.test.push_back(p);
    split.counts.test[domain_index(p.domain)]++;
  }
  return split;
}

std::string render_counts_table(const DatasetCounts& c) {
  std::ostringstream os;
  os << "Split\tKind";
  for (Domain d : kAllDomains) os << '\t' << display_name(d);
  os << "\tTotal\n";
  auto row = [&](std::string_view split, std::string_view kind, const DatasetCounts::Row& r) {
    os << split << '\t' << kind;
    for (auto v : r) os << '\t' << v;
    os << '\t' << DatasetCounts::total(r) << '\n';
  };
  row("Train", "Text", c.train[0]);
  row("Train", "Tables", c.train[1]);
  row("Train", "Trees", c.train[2]);
  row("Train", "Total", c.train_total());
  row("Val", "Text Q&A", c.validation[0]);
  row("Val", "Table Q&A", c.validation[1]);
  row("Val", "Tree Q&A", c.validation[2]);
  row("Val", "Total Q&A", c.validation_total());
  row("Test", "Test Q&A", c.test);
  return os.str();
}

json corpus_manifest(const std::vector<Document>& docs) {
  json list = json::array();
  for (const auto& d : docs) {
    list.push_back({{"id", d.id},
                    {"title", d.title},
                    {"domain", to_string(d.domain)},
                    {"kind", to_string(d.kind)},
                    {"provenance", d.provenance}});
  }
  return {{"format_version", 1}, {"documents", std::move(list)}};
}

void to_json(json& j, const Document& d) {
  j = {{"id", d.id},
       {"title", d.title},
       {"domain", to_string(d.domain)},
       {"kind", to_string(d.kind)},
       {"provenance", d.provenance},
       {"body", d.body}};
}

void from_json(const json& j, Document& d) {
  d.id = j.at("id").get<std::string>();
  d.title = j.value("title", "");
  d.domain = domain_from_string(j.at("domain").get<std::string>(), d.id);
  d.kind = source_kind_from_string(j.at("kind").get<std::string>(), d.id);
  d.provenance = j.value("provenance", "");
  d.body = j.at("body").get<std::string>();
}

void to_json(json& j, const Chunk& c) {
  j = {{"id", c.id},
       {"doc_id", c.doc_id},
       {"text", c.text},
       {"term_count", c.term_count},
       {"ordinal", c.ordinal}};
  j["heading"] = c.heading ? json(*c.heading) : json(nullptr);
}

void from_json(const json& j, Chunk& c) {
  c.id = j.at("id").get<std::string>();
  c.doc_id = j.at("doc_id").get<std::string>();
  c.text = j.at("text").get<std::string>();
  c.term_count = j.at("term_count").get<std::size_t>();
  c.ordinal = j.at("ordinal").get<std::size_t>();
  if (j.contains("heading") && !j["heading"].is_null()) c.heading = j["heading"].get<std::string>();
}

void to_json(json& j, const QAPair& p) {
  j = {{"id", p.id},
       {"kind", to_string(p.kind)},
       {"domain", to_string(p.domain)},
       {"question", p.question},
       {"answer", p.answer},
       {"source_refs", p.source_refs}};
}

void from_json(const json& j, QAPair& p) {
  p.id = j.at("id").get<std::string>();
  p.kind = qa_kind_from_string(j.at("kind").get<std::string>(), p.id);
  p.domain = domain_from_string(j.at("domain").get<std::string>(), p.id);
  p.question = j.at("question").get<std::string>();
  p.answer = j.at("answer").get<std::string>();
  p.source_refs = j.value("source_refs", std::vector<std::string>{});
  if (text::is_blank(p.question) || text::is_blank(p.answer)) {
    throw Error(ErrorCode::FormatError, "Q&A pair '" + p.id + "' has a blank question or answer");
  }
}

void to_json(json& j, const DatasetCounts& c) {
  auto row = [](const DatasetCounts::Row& r) {
    json o = json::object();
    for (Domain d : kAllDomains) o[std::string(to_string(d))] = r[domain_index(d)];
    o["Total"] = DatasetCounts::total(r);
    return o;
  };
  j = {{"train",
        {{"text", row(c.train[0])},
         {"tables", row(c.train[1])},
         {"trees", row(c.train[2])},
         {"total", row(c.train_total())}}},
       {"validation",
        {{"text_qa", row(c.validation[0])},
         {"table_qa", row(c.validation[1])},
         {"tree_qa", row(c.validation[2])},
         {"total_qa", row(c.validation_total())}}},
       {"test", {{"test_qa", row(c.test)}}}};
}

std::string write_qa_records(const std::vector<QAPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += json(p).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<QAPair> read_qa_records(std::string_view jsonl) {
  std::vector<QAPair> out;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    try {
      out.push_back(json::parse(line).get<QAPair>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError,
                  "Q&A record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace goatrag::corpus
