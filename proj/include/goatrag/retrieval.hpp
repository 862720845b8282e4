#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "goatrag/corpus.hpp"
#include "goatrag/domain.hpp"
#include "goatrag/embedding.hpp"
#include "goatrag/kernels.hpp"

namespace goatrag::retrieval {

using kernels::Bm25Params;
using kernels::Exec;

inline constexpr std::uint32_t kIndexFormatVersion = 1;

// Raw adds the unbounded BM25 score to the cosine; Normalized first divides
// BM25 by the best BM25 score among the candidates of the query.
enum class FusionMode { Raw, Normalized };

struct HybridConfig {
  double alpha = 0.3;  // weight of the lexical score
  std::size_t top_k = 3;
  FusionMode mode = FusionMode::Normalized;
  Exec exec = Exec::Parallel;
};

struct IndexedChunk {
  std::string id;
  std::string doc_id;
  std::optional<std::string> heading;
  std::string text;
  Domain domain = Domain::BasicFarmingKnowledge;
  SourceKind kind = SourceKind::Article;
  std::string provenance;
  std::size_t ordinal = 0;
};

/// Chunks of every document, carrying the document's domain, kind and
/// provenance.
std::vector<IndexedChunk> chunks_of(const std::vector<corpus::Document>& docs);

struct Filter {
  std::set<Domain> domains;     // empty = any
  std::set<SourceKind> kinds;   // empty = any
  bool admits(const IndexedChunk& c) const;
};

struct Hit {
  std::size_t chunk = 0;  // position in Index::chunks()
  std::string chunk_id;
  double bm25 = 0.0;       // raw
  double lexical = 0.0;    // the BM25 term actually fused (raw or normalized)
  double cosine = 0.0;
  double score = 0.0;
  std::size_t rank = 0;    // 1-based
};

/// s = alpha * lexical + (1 - alpha) * cosine per element.
std::vector<double> fuse(const std::vector<double>& bm25, const std::vector<double>& cosine,
                         double alpha, FusionMode mode);

/// Indices of the k best scores, best first; equal scores go to the smaller
/// id.
std::vector<std::size_t> top_k(const std::vector<double>& scores,
                               const std::vector<std::string>& ids, std::size_t k);

class Index {
 public:
  /// Throws EmptyCorpus without chunks, DuplicateId on a repeated chunk id and
  /// DimensionMismatch when the embedder returns vectors of the wrong size.
  static Index build(std::vector<IndexedChunk> chunks, const embed::EmbeddingProvider& embedder,
                     Bm25Params params = {});

  /// Hybrid search. Throws EmptyQuery when the query has no tokens and a
  /// zero embedding, DimensionMismatch when the embedder does not match the
  /// index.
  std::vector<Hit> search(std::string_view query, const embed::EmbeddingProvider& embedder,
                          const HybridConfig& config, const Filter& filter = {}) const;

  // Per-chunk component scores for a query (all chunks, no filter).
  std::vector<double> bm25(std::string_view query, Exec exec = Exec::Parallel) const;
  std::vector<double> cosine(const embed::Vector& query, Exec exec = Exec::Parallel) const;

  // Term ids of the query tokens that occur in the vocabulary, in order.
  std::vector<std::uint32_t> query_terms(std::string_view query) const;

  const std::vector<IndexedChunk>& chunks() const noexcept { return chunks_; }
  std::size_t size() const noexcept { return chunks_.size(); }
  std::size_t dimension() const noexcept { return dim_; }
  Bm25Params params() const noexcept { return params_; }
  const std::string& embedder_name() const noexcept { return embedder_; }
  const kernels::LexicalIndex& lexical() const noexcept { return lex_; }
  const std::vector<double>& embeddings() const noexcept { return emb_; }
  const IndexedChunk* find(std::string_view chunk_id) const;

  // Hex digest of the serialized form, computed once at build or load.
  const std::string& version() const noexcept { return version_; }

  /// Binary layout: "GRIX", u32 format version, u32 dimension, u64 chunk
  /// count, f64 k1, f64 b, then the embedder name, chunks, vocabulary,
  /// postings and embeddings, and a trailing FNV-1a checksum of everything
  /// before it. Integers and doubles are little-endian.
  void save(std::ostream& out) const;
  std::string serialize() const;
  /// Throws FormatError on a bad magic, checksum or truncation and
  /// VersionMismatch on another format version.
  static Index load(std::istream& in);
  static Index deserialize(std::string_view bytes);
  void save_file(const std::string& path) const;
  static Index load_file(const std::string& path);

 private:
  std::vector<IndexedChunk> chunks_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::uint32_t> term_ids_;
  kernels::LexicalIndex lex_;
  std::vector<double> emb_;
  std::size_t dim_ = 0;
  Bm25Params params_;
  std::string embedder_;
  std::string version_;
};

void to_json(nlohmann::json& j, const Hit& h);

}  // namespace goatrag::retrieval
