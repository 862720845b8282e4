#pragma once

// Shared fixture builders for the unit tests and the acceptance binary.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "goatrag/corpus.hpp"
#include "goatrag/embedding.hpp"
#include "goatrag/retrieval.hpp"
#include "goatrag/tablex.hpp"
#include "goatrag/treex.hpp"
#include "goatrag/websearch.hpp"

namespace fixture {

std::filesystem::path source_dir();
std::filesystem::path sample_dir();  // data/sample
std::string read(const std::filesystem::path& p);

// The lamb diarrhea subtree shipped in data/sample.
goatrag::treex::DecisionTree lamb_tree();

// Removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Orthonormal basis vector per listed token; all other tokens map to zero.
class OneHotEmbedder final : public goatrag::embed::EmbeddingProvider {
 public:
  explicit OneHotEmbedder(std::vector<std::string> vocab);
  std::size_t dimension() const override { return vocab_.size(); }
  goatrag::embed::Vector embed(std::string_view text) const override;
  std::string name() const override { return "one-hot"; }

 private:
  std::vector<std::string> vocab_;
};

struct RandomTree {
  goatrag::treex::DecisionTree tree;
  std::vector<std::size_t> leaf_depths;  // recorded while generating
};

// Internal nodes get 2-3 branches; attribute names are unique per depth
// level so they never repeat along a path.
RandomTree random_tree(std::mt19937_64& rng, std::size_t max_depth);

struct RandomCorpus {
  std::vector<goatrag::retrieval::IndexedChunk> chunks;
  std::vector<std::vector<std::string>> tokens;  // per chunk, as written
  std::vector<std::string> ids;
};

// Chunks of lowercase words drawn from a small vocabulary, so terms repeat.
RandomCorpus random_corpus(std::mt19937_64& rng, std::size_t max_chunks, std::size_t vocab = 24);
std::vector<std::string> random_query(std::mt19937_64& rng, std::size_t max_terms, std::size_t vocab = 24);
std::string join_words(const std::vector<std::string>& words);

goatrag::tablex::Table random_table(std::mt19937_64& rng, std::size_t max_rows, std::size_t max_cols);

// Synthetic corpus for the ablation runs: single-sentence article sections,
// one textualized table, the lamb diarrhea tree, and novel questions whose
// answers only the search fixture knows.
struct Ablation {
  std::vector<goatrag::corpus::Document> documents;
  std::vector<goatrag::treex::DecisionTree> trees;
  std::vector<goatrag::corpus::QAPair> pairs;
  std::shared_ptr<goatrag::websearch::FixtureSearchProvider> search;
};

Ablation ablation_fixture();

}  // namespace fixture
