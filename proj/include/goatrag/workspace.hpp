#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "goatrag/corpus.hpp"
#include "goatrag/retrieval.hpp"
#include "goatrag/tablex.hpp"
#include "goatrag/treex.hpp"

namespace goatrag::workspace {

struct Sources {
  std::vector<corpus::Document> articles;
  std::vector<tablex::Table> tables;
  std::vector<treex::DecisionTree> trees;
};

/// Article file: optional header of "key: value" lines (title, domain, id,
/// provenance) closed by a line "---", then the body. Without a title the
/// file stem is used, and the stem is also the default id; the domain is
/// required.
corpus::Document parse_article(std::string_view content, const std::string& file_name);

/// Table file: optional leading "# key: value" lines (id, caption, domain,
/// delimiter), then delimiter-separated values. The delimiter defaults to
/// ',' for .csv and tab for .tsv.
tablex::Table parse_table_file(std::string_view content, const std::string& file_name);

/// Reads a source directory. With a manifest.json the listed files are
/// loaded:
///   {"documents": [{"path", "title"?, "domain"?, "id"?}],
///    "tables": [{"path", "id"?, "caption"?, "domain", "delimiter"?}],
///    "trees": ["path" | {"path"}]}
/// Otherwise files are classified by extension: .md/.txt articles,
/// .csv/.tsv tables, .json/.yaml/.yml trees.
Sources load_source_dir(const std::filesystem::path& dir);

/// Same classification over in-memory files (name -> content).
Sources load_uploads(const std::map<std::string, std::string>& files);

/// Row statements as blank-line separated paragraphs so each row becomes a
/// chunk.
corpus::Document table_document(const tablex::Table& t, const tablex::TableNarrative& n);

/// Path narratives followed by the tree's Q&A pairs ("Q: ...\nA: ...").
corpus::Document tree_document(const treex::DecisionTree& tree, const treex::TreeQADataset& qa);

struct Knowledge {
  std::vector<corpus::Document> documents;  // every kind
  std::vector<tablex::PreservationReport> reports;
  std::vector<tablex::TableNarrative> narratives;
  std::vector<corpus::QAPair> tree_qa;
};

Knowledge textualize(const Sources& sources, const tablex::SemanticParser& parser);

nlohmann::json table_to_json(const tablex::Table& t);
tablex::Table table_from_json(const nlohmann::json& j);

/// On-disk layout of a workspace directory:
///   sources.json   ingested articles, tables and trees
///   corpus.json    every document after textualization
///   index.grix     retrieval index
///   narratives/    one text file per table
///   reports/       preservation and evaluation reports
///   qa/            generated Q&A records (JSONL)
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path sources_path() const { return root_ / "sources.json"; }
  std::filesystem::path corpus_path() const { return root_ / "corpus.json"; }
  std::filesystem::path index_path() const { return root_ / "index.grix"; }
  std::filesystem::path reports_dir() const { return root_ / "reports"; }
  std::filesystem::path qa_dir() const { return root_ / "qa"; }

  void save_sources(const Sources& s) const;
  Sources load_sources() const;  // throws IoError when absent
  void save_knowledge(const Knowledge& k) const;
  std::vector<corpus::Document> load_documents() const;
  bool has(const std::filesystem::path& p) const { return std::filesystem::exists(p); }

 private:
  std::filesystem::path root_;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view content);

}  // namespace goatrag::workspace
