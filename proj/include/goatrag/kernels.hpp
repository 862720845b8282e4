#pragma once

// Scoring kernels. Each has a serial reference and an OpenMP version; the two
// perform the same floating-point operations per output element in the same
// order, so their results are bit-identical.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace goatrag::kernels {

enum class Exec { Serial, Parallel };

// Below this many output rows the parallel kernels run on one thread.
inline constexpr std::size_t kParallelThreshold = 512;
// Chunks per work item of the parallel BM25 kernel.
inline constexpr std::size_t kBm25Block = 4096;

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

/// Term statistics as postings (term -> chunks, ascending chunk id).
struct LexicalIndex {
  std::size_t num_chunks = 0;
  std::size_t num_terms = 0;
  std::vector<std::uint32_t> doc_len;
  double avg_len = 0.0;

  std::vector<std::size_t> post_offsets;  // num_terms + 1
  std::vector<std::uint32_t> post_chunk;  // ascending within a term
  std::vector<std::uint32_t> post_tf;

  std::vector<double> idf;  // per term

  std::uint32_t doc_freq(std::uint32_t term) const {
    return static_cast<std::uint32_t>(post_offsets[term + 1] - post_offsets[term]);
  }
};

/// Builds postings from per-chunk term-id sequences.
LexicalIndex build_lexical(const std::vector<std::vector<std::uint32_t>>& chunk_terms,
                           std::size_t num_terms);

/// Recomputes average length and idf from doc_len and postings.
void finalize_lexical(LexicalIndex& ix);

/// ln((N - n + 0.5) / (n + 0.5) + 1)
double bm25_idf(std::size_t num_chunks, std::size_t doc_freq) noexcept;

/// Contribution of one query term occurring f times in a chunk of length len.
double bm25_term(double idf, double f, double len, double avg_len, Bm25Params p) noexcept;

/// Score of every chunk. `query` holds term ids in query order, repeats
/// included; each occurrence contributes once.
std::vector<double> bm25_scores(const LexicalIndex& ix, const std::vector<std::uint32_t>& query,
                                Bm25Params p, Exec exec = Exec::Parallel);

/// rows (n x dim, row-major) times q.
std::vector<double> matvec(const std::vector<double>& rows, std::size_t dim,
                           const std::vector<double>& q, Exec exec = Exec::Parallel);

/// a (m x dim) times b (n x dim) transposed, row-major m x n.
std::vector<double> gram(const std::vector<double>& a, const std::vector<double>& b,
                         std::size_t dim, Exec exec = Exec::Parallel);

}  // namespace goatrag::kernels
