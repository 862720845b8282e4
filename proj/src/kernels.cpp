#include "goatrag/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

namespace goatrag::kernels {

double bm25_idf(std::size_t num_chunks, std::size_t doc_freq) noexcept {
  const double N = static_cast<double>(num_chunks);
  const double n = static_cast<double>(doc_freq);
  return std::log((N - n + 0.5) / (n + 0.5) + 1.0);
}

double bm25_term(double idf, double f, double len, double avg_len, Bm25Params p) noexcept {
  const double norm = avg_len > 0.0 ? len / avg_len : 0.0;
  return idf * (f * (p.k1 + 1.0)) / (f + p.k1 * (1.0 - p.b + p.b * norm));
}

void finalize_lexical(LexicalIndex& ix) {
  ix.num_chunks = ix.doc_len.size();
  const double total = std::accumulate(ix.doc_len.begin(), ix.doc_len.end(), 0.0);
  ix.avg_len = ix.num_chunks ? total / static_cast<double>(ix.num_chunks) : 0.0;

  ix.idf.resize(ix.num_terms);
  for (std::uint32_t t = 0; t < ix.num_terms; ++t) ix.idf[t] = bm25_idf(ix.num_chunks, ix.doc_freq(t));
}

LexicalIndex build_lexical(const std::vector<std::vector<std::uint32_t>>& chunk_terms,
                           std::size_t num_terms) {
  LexicalIndex ix;
  ix.num_terms = num_terms;
  ix.doc_len.reserve(chunk_terms.size());
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> by_term(num_terms);
  for (std::uint32_t c = 0; c < chunk_terms.size(); ++c) {
    ix.doc_len.push_back(static_cast<std::uint32_t>(chunk_terms[c].size()));
    std::vector<std::uint32_t> sorted = chunk_terms[c];
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      by_term[sorted[i]].emplace_back(c, static_cast<std::uint32_t>(j - i));
      i = j;
    }
  }
  ix.post_offsets.assign(num_terms + 1, 0);
  for (std::size_t t = 0; t < num_terms; ++t) {
    ix.post_offsets[t + 1] = ix.post_offsets[t] + by_term[t].size();
    for (const auto& [c, f] : by_term[t]) {
      ix.post_chunk.push_back(c);
      ix.post_tf.push_back(f);
    }
  }
  finalize_lexical(ix);
  return ix;
}

namespace {

std::vector<double> bm25_serial(const LexicalIndex& ix, const std::vector<std::uint32_t>& query,
                                Bm25Params p) {
  std::vector<double> scores(ix.num_chunks, 0.0);
  for (std::uint32_t t : query) {
    if (t >= ix.num_terms) continue;
    for (std::size_t k = ix.post_offsets[t]; k < ix.post_offsets[t + 1]; ++k) {
      const std::uint32_t c = ix.post_chunk[k];
      scores[c] += bm25_term(ix.idf[t], ix.post_tf[k], ix.doc_len[c], ix.avg_len, p);
    }
  }
  return scores;
}

// Chunks are split into fixed blocks and each block walks the postings of
// every query term restricted to its chunk range. A chunk receives the same
// additions in the same order as in bm25_serial.
std::vector<double> bm25_parallel(const LexicalIndex& ix, const std::vector<std::uint32_t>& query,
                                  Bm25Params p) {
  std::vector<double> scores(ix.num_chunks, 0.0);
  const std::size_t blocks = (ix.num_chunks + kBm25Block - 1) / kBm25Block;
  const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(dynamic) if (ix.num_chunks > kParallelThreshold)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::uint32_t lo = static_cast<std::uint32_t>(static_cast<std::size_t>(b) * kBm25Block);
    const std::uint32_t hi = static_cast<std::uint32_t>(std::min(ix.num_chunks, (static_cast<std::size_t>(b) + 1) * kBm25Block));
    for (std::uint32_t t : query) {
      if (t >= ix.num_terms) continue;
      const auto first = ix.post_chunk.begin() + static_cast<std::ptrdiff_t>(ix.post_offsets[t]);
      const auto last = ix.post_chunk.begin() + static_cast<std::ptrdiff_t>(ix.post_offsets[t + 1]);
      for (auto it = std::lower_bound(first, last, lo); it != last && *it < hi; ++it) {
        const std::size_t k = static_cast<std::size_t>(it - ix.post_chunk.begin());
        scores[*it] += bm25_term(ix.idf[t], ix.post_tf[k], ix.doc_len[*it], ix.avg_len, p);
      }
    }
  }
  return scores;
}

double row_dot(const double* a, const double* b, std::size_t dim) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < dim; ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

std::vector<double> bm25_scores(const LexicalIndex& ix, const std::vector<std::uint32_t>& query,
                                Bm25Params p, Exec exec) {
  return exec == Exec::Serial ? bm25_serial(ix, query, p) : bm25_parallel(ix, query, p);
}

std::vector<double> matvec(const std::vector<double>& rows, std::size_t dim,
                           const std::vector<double>& q, Exec exec) {
  const std::size_t n = dim ? rows.size() / dim : 0;
  std::vector<double> out(n, 0.0);
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) out[i] = row_dot(rows.data() + i * dim, q.data(), dim);
    return out;
  }
  const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    out[i] = row_dot(rows.data() + static_cast<std::size_t>(i) * dim, q.data(), dim);
  }
  return out;
}

std::vector<double> gram(const std::vector<double>& a, const std::vector<double>& b,
                         std::size_t dim, Exec exec) {
  const std::size_t m = dim ? a.size() / dim : 0;
  const std::size_t n = dim ? b.size() / dim : 0;
  std::vector<double> out(m * n, 0.0);
  auto fill_row = [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row_dot(a.data() + i * dim, b.data() + j * dim, dim);
  };
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < m; ++i) fill_row(i);
    return out;
  }
  const std::ptrdiff_t sm = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * n > kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < sm; ++i) fill_row(static_cast<std::size_t>(i));
  return out;
}

}  // namespace goatrag::kernels
