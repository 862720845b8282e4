#include "goatrag/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"
#include "goatrag/text.hpp"

namespace goatrag::retrieval {

std::vector<IndexedChunk> chunks_of(const std::vector<corpus::Document>& docs) {
  std::vector<IndexedChunk> out;
  for (const auto& d : docs) {
    for (auto& c : corpus::chunk_document(d)) {
      out.push_back({std::move(c.id), d.id, std::move(c.heading), std::move(c.text), d.domain, d.kind,
                     d.provenance, c.ordinal});
    }
  }
  return out;
}

bool Filter::admits(const IndexedChunk& c) const {
  return (domains.empty() || domains.count(c.domain)) && (kinds.empty() || kinds.count(c.kind));
}

std::vector<double> fuse(const std::vector<double>& bm25, const std::vector<double>& cosine,
                         double alpha, FusionMode mode) {
  double scale = 1.0;
  if (mode == FusionMode::Normalized) {
    const double mx = bm25.empty() ? 0.0 : *std::max_element(bm25.begin(), bm25.end());
    scale = mx > 0.0 ? mx : 0.0;
  }
  std::vector<double> out(bm25.size());
  for (std::size_t i = 0; i < bm25.size(); ++i) {
    double lex = bm25[i];
    if (mode == FusionMode::Normalized) lex = scale > 0.0 ? bm25[i] / scale : 0.0;
    out[i] = alpha * lex + (1.0 - alpha) * cosine[i];
  }
  return out;
}

std::vector<std::size_t> top_k(const std::vector<double>& scores,
                               const std::vector<std::string>& ids, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
  order.resize(k);
  return order;
}

Index Index::build(std::vector<IndexedChunk> chunks, const embed::EmbeddingProvider& embedder,
                   Bm25Params params) {
  if (chunks.empty()) throw Error(ErrorCode::EmptyCorpus, "no chunks to index");
  Index ix;
  ix.dim_ = embedder.dimension();
  ix.params_ = params;
  ix.embedder_ = embedder.name();
  std::vector<std::vector<std::uint32_t>> terms(chunks.size());
  ix.emb_.reserve(chunks.size() * ix.dim_);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (!ix.by_id_.emplace(chunks[i].id, i).second) {
      throw Error(ErrorCode::DuplicateId, "chunk id '" + chunks[i].id + "' occurs twice");
    }
    for (auto& tok : text::tokenize(chunks[i].text)) {
      auto [it, fresh] = ix.term_ids_.emplace(tok, static_cast<std::uint32_t>(ix.vocab_.size()));
      if (fresh) ix.vocab_.push_back(std::move(tok));
      terms[i].push_back(it->second);
    }
    const auto v = embedder.embed(chunks[i].text);
    if (v.size() != ix.dim_) {
      throw Error(ErrorCode::DimensionMismatch, "embedder returned " + std::to_string(v.size()) +
                                                    " dimensions, expected " + std::to_string(ix.dim_));
    }
    ix.emb_.insert(ix.emb_.end(), v.begin(), v.end());
  }
  ix.lex_ = kernels::build_lexical(terms, ix.vocab_.size());
  ix.chunks_ = std::move(chunks);
  ix.version_ = text::hex64(text::fnv1a(ix.serialize()));
  return ix;
}

std::vector<std::uint32_t> Index::query_terms(std::string_view query) const {
  std::vector<std::uint32_t> out;
  for (const auto& tok : text::tokenize(query)) {
    if (auto it = term_ids_.find(tok); it != term_ids_.end()) out.push_back(it->second);
  }
  return out;
}

std::vector<double> Index::bm25(std::string_view query, Exec exec) const {
  return kernels::bm25_scores(lex_, query_terms(query), params_, exec);
}

std::vector<double> Index::cosine(const embed::Vector& query, Exec exec) const {
  if (query.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "query has " + std::to_string(query.size()) +
                                                  " dimensions, index has " + std::to_string(dim_));
  }
  return kernels::matvec(emb_, dim_, query, exec);
}

const IndexedChunk* Index::find(std::string_view chunk_id) const {
  auto it = by_id_.find(std::string(chunk_id));
  return it == by_id_.end() ? nullptr : &chunks_[it->second];
}

std::vector<Hit> Index::search(std::string_view query, const embed::EmbeddingProvider& embedder,
                               const HybridConfig& config, const Filter& filter) const {
  if (embedder.dimension() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "embedder '" + embedder.name() + "' has " +
                                                  std::to_string(embedder.dimension()) +
                                                  " dimensions, index has " + std::to_string(dim_));
  }
  const auto qvec = embedder.embed(query);
  const bool zero = std::all_of(qvec.begin(), qvec.end(), [](double x) { return x == 0.0; });
  if (text::tokenize(query).empty() && zero) throw Error(ErrorCode::EmptyQuery, "query has no terms");

  const auto lexical = kernels::bm25_scores(lex_, query_terms(query), params_, config.exec);
  const auto dense = cosine(qvec, config.exec);

  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < chunks_.size(); ++i) {
    if (filter.admits(chunks_[i])) cand.push_back(i);
  }
  std::vector<double> b(cand.size()), c(cand.size());
  std::vector<std::string> ids(cand.size());
  for (std::size_t k = 0; k < cand.size(); ++k) {
    b[k] = lexical[cand[k]];
    c[k] = dense[cand[k]];
    ids[k] = chunks_[cand[k]].id;
  }
  const auto fused = fuse(b, c, config.alpha, config.mode);
  const double mx = b.empty() ? 0.0 : *std::max_element(b.begin(), b.end());

  std::vector<Hit> hits;
  for (std::size_t k : top_k(fused, ids, config.top_k)) {
    Hit h;
    h.chunk = cand[k];
    h.chunk_id = ids[k];
    h.bm25 = b[k];
    h.lexical = config.mode == FusionMode::Raw ? b[k] : (mx > 0.0 ? b[k] / mx : 0.0);
    h.cosine = c[k];
    h.score = fused[k];
    h.rank = hits.size() + 1;
    hits.push_back(std::move(h));
  }
  return hits;
}

// ---- persistence ----

namespace {

constexpr char kMagic[4] = {'G', 'R', 'I', 'X'};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  void raw(std::string_view s) { buf_.append(s); }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw Error(ErrorCode::FormatError, "index file is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(b_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(b_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t count(std::size_t elem_size) {
    const std::uint64_t n = u64();
    if (elem_size && n > (b_.size() - pos_) / elem_size) {
      throw Error(ErrorCode::FormatError, "index file is truncated");
    }
    return static_cast<std::size_t>(n);
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string Index::serialize() const {
  Writer w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(kIndexFormatVersion);
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u64(chunks_.size());
  w.f64(params_.k1);
  w.f64(params_.b);
  w.str(embedder_);
  for (const auto& c : chunks_) {
    w.str(c.id);
    w.str(c.doc_id);
    w.u8(c.heading ? 1 : 0);
    w.str(c.heading.value_or(""));
    w.str(c.text);
    w.u8(static_cast<std::uint8_t>(c.domain));
    w.u8(static_cast<std::uint8_t>(c.kind));
    w.str(c.provenance);
    w.u64(c.ordinal);
  }
  w.u64(vocab_.size());
  for (const auto& t : vocab_) w.str(t);
  for (std::uint32_t len : lex_.doc_len) w.u32(len);
  for (std::size_t off : lex_.post_offsets) w.u64(off);
  w.u64(lex_.post_chunk.size());
  for (std::size_t k = 0; k < lex_.post_chunk.size(); ++k) {
    w.u32(lex_.post_chunk[k]);
    w.u32(lex_.post_tf[k]);
  }
  for (double x : emb_) w.f64(x);
  const std::uint64_t sum = text::fnv1a(w.bytes());
  w.u64(sum);
  return std::move(w.bytes());
}

void Index::save(std::ostream& out) const {
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed to write index");
}

Index Index::deserialize(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != std::string_view(kMagic, 4)) {
    throw Error(ErrorCode::FormatError, "not an index file (bad magic)");
  }
  Reader r(bytes.substr(4));
  const std::uint32_t version = r.u32();
  if (version != kIndexFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "index format version " + std::to_string(version) +
                                                " is not supported (expected " +
                                                std::to_string(kIndexFormatVersion) + ")");
  }
  if (bytes.size() < 12) throw Error(ErrorCode::FormatError, "index file is truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  Reader tail(bytes.substr(bytes.size() - 8));
  if (tail.u64() != text::fnv1a(body)) throw Error(ErrorCode::FormatError, "index checksum mismatch");

  Reader in(body.substr(8));
  Index ix;
  ix.dim_ = in.u32();
  const std::size_t n = in.count(1);
  ix.params_.k1 = in.f64();
  ix.params_.b = in.f64();
  ix.embedder_ = in.str();
  ix.chunks_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = ix.chunks_[i];
    c.id = in.str();
    c.doc_id = in.str();
    const bool has_heading = in.u8() != 0;
    std::string heading = in.str();
    if (has_heading) c.heading = std::move(heading);
    c.text = in.str();
    const auto d = in.u8();
    const auto k = in.u8();
    if (d >= kAllDomains.size() || k >= kAllSourceKinds.size()) {
      throw Error(ErrorCode::FormatError, "chunk " + c.id + " has an invalid domain or kind");
    }
    c.domain = static_cast<Domain>(d);
    c.kind = static_cast<SourceKind>(k);
    c.provenance = in.str();
    c.ordinal = in.u64();
    if (!ix.by_id_.emplace(c.id, i).second) throw Error(ErrorCode::FormatError, "duplicate chunk id " + c.id);
  }
  const std::size_t v = in.count(8);
  ix.vocab_.reserve(v);
  for (std::size_t t = 0; t < v; ++t) {
    ix.vocab_.push_back(in.str());
    ix.term_ids_.emplace(ix.vocab_.back(), static_cast<std::uint32_t>(t));
  }
  auto& lex = ix.lex_;
  lex.num_terms = v;
  lex.doc_len.resize(n);
  for (auto& len : lex.doc_len) len = in.u32();
  lex.post_offsets.resize(v + 1);
  for (auto& off : lex.post_offsets) off = in.u64();
  const std::size_t np = in.count(8);
  if (lex.post_offsets.front() != 0 || lex.post_offsets.back() != np ||
      !std::is_sorted(lex.post_offsets.begin(), lex.post_offsets.end())) {
    throw Error(ErrorCode::FormatError, "index postings offsets are inconsistent");
  }
  lex.post_chunk.resize(np);
  lex.post_tf.resize(np);
  for (std::size_t k = 0; k < np; ++k) {
    lex.post_chunk[k] = in.u32();
    lex.post_tf[k] = in.u32();
    if (lex.post_chunk[k] >= n) throw Error(ErrorCode::FormatError, "posting references a missing chunk");
  }
  ix.emb_.resize(n * ix.dim_);
  for (auto& x : ix.emb_) x = in.f64();
  if (in.pos() != body.size() - 8) throw Error(ErrorCode::FormatError, "trailing bytes in index file");
  kernels::finalize_lexical(lex);
  ix.version_ = text::hex64(text::fnv1a(bytes));
  return ix;
}

Index Index::load(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

void Index::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  save(out);
}

Index Index::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IndexUnavailable, "cannot open index " + path);
  return load(in);
}

void to_json(nlohmann::json& j, const Hit& h) {
  j = {{"chunk_id", h.chunk_id}, {"rank", h.rank},     {"score", h.score},
       {"bm25", h.bm25},         {"lexical", h.lexical}, {"cosine", h.cosine}};
}

}  // namespace goatrag::retrieval
