#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "goatrag/domain.hpp"

namespace goatrag::corpus {

struct DocumentMeta {
  std::string title;
  Domain domain = Domain::BasicFarmingKnowledge;
  SourceKind kind = SourceKind::Article;
  std::string provenance;
  // Caller-supplied id; when absent a content hash is used.
  std::optional<std::string> id;
};

struct Document {
  std::string id;
  std::string title;
  Domain domain = Domain::BasicFarmingKnowledge;
  std::string body;
  SourceKind kind = SourceKind::Article;
  std::string provenance;
};

struct Chunk {
  std::string id;
  std::string doc_id;
  std::optional<std::string> heading;
  std::string text;
  std::size_t term_count = 0;
  std::size_t ordinal = 0;
};

struct QAPair {
  std::string id;
  QAKind kind = QAKind::Text;
  Domain domain = Domain::BasicFarmingKnowledge;
  std::string question;
  std::string answer;
  std::vector<std::string> source_refs;
};

/// Normalizes line endings and assigns a content-hash id unless one is given.
/// Throws EmptyDocument when `raw` is blank.
Document ingest_document(std::string_view raw, DocumentMeta meta);

/// A subheading has at least one ASCII letter, no lowercase letters, at most
/// 80 characters after trimming, and does not end in '.', '!' or '?'.
bool is_subheading(std::string_view line);

/// Splits an article at its subheadings. Each chunk's text is the raw slice of
/// the body starting at its heading line, so joining the texts with '\n'
/// reproduces the body. Text before the first heading becomes a chunk without
/// a heading; a blank preamble is folded into the first section instead.
std::vector<Chunk> segment_by_subheadings(const Document& doc);

/// Articles go through segment_by_subheadings; textualized narratives (table
/// and tree documents) yield one chunk per blank-line separated paragraph.
std::vector<Chunk> chunk_document(const Document& doc);

std::string reconstruct_body(const std::vector<Chunk>& chunks);

/// Indices of chunks whose term_count exceeds `max_terms`.
std::vector<std::size_t> oversized_chunks(const std::vector<Chunk>& chunks, std::size_t max_terms);

class Corpus {
 public:
  // Throws DuplicateId on id collision.
  const Document& add(Document doc);
  const Document& ingest(std::string_view raw, DocumentMeta meta);

  const std::vector<Document>& documents() const noexcept { return docs_; }
  const Document* find(std::string_view id) const;
  bool empty() const noexcept { return docs_.empty(); }
  std::size_t size() const noexcept { return docs_.size(); }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Table-2 style tallies: rows are kinds, columns the five domains.
struct DatasetCounts {
  using Row = std::array<std::size_t, 5>;
  std::array<Row, 3> train{};       // article, table, tree
  std::array<Row, 3> validation{};  // text, table, tree Q&A
  Row test{};

  static std::size_t total(const Row& r);
  Row train_total() const;
  Row validation_total() const;
};

struct DatasetInput {
  std::vector<Document> documents;
  std::vector<QAPair> validation;
  std::vector<QAPair> test;
  // Table, tree and path ids that Q&A pairs may cite in addition to document
  // and chunk ids.
  std::vector<std::string> extra_source_ids;
};

struct DatasetSplit {
  std::map<SourceKind, std::vector<Document>> train;
  std::map<QAKind, std::vector<QAPair>> validation;
  std::vector<QAPair> test;
  DatasetCounts counts;
};

/// Throws DanglingReference when a pair cites an unknown source, DuplicateId
/// when a pair id occurs twice, FormatError for a Novel pair in validation.
DatasetSplit assemble_dataset(const DatasetInput& input);

/// Tab-separated rendering in the Train/Validation/Test layout.
std::string render_counts_table(const DatasetCounts& counts);

nlohmann::json corpus_manifest(const std::vector<Document>& docs);

void to_json(nlohmann::json& j, const Document& d);
void from_json(const nlohmann::json& j, Document& d);
void to_json(nlohmann::json& j, const Chunk& c);
void from_json(const nlohmann::json& j, Chunk& c);
void to_json(nlohmann::json& j, const QAPair& p);
void from_json(const nlohmann::json& j, QAPair& p);
void to_json(nlohmann::json& j, const DatasetCounts& c);

// One JSON object per line.
std::string write_qa_records(const std::vector<QAPair>& pairs);
std::vector<QAPair> read_qa_records(std::string_view jsonl);

}  // namespace goatrag::corpus
