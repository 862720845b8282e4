#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace goatrag::embed {

using Vector = std::vector<double>;

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  // Unit-normalized, or all zeros when the text carries no signal.
  virtual Vector embed(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

/// Bag-of-terms hashed into `dimension` buckets (FNV-1a of each token), then
/// L2-normalized. Texts sharing no tokens are orthogonal unless their tokens
/// collide in a bucket.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dimension = 1024);
  std::size_t dimension() const override { return dim_; }
  Vector embed(std::string_view text) const override;
  std::string name() const override { return "hash-" + std::to_string(dim_); }

 private:
  std::size_t dim_;
};

struct HttpEmbeddingConfig {
  std::string base_url;
  std::string api_key;
  std::string model = "text-embedding-3-small";
  std::size_t dimension = 1536;
  std::chrono::milliseconds timeout{30000};

  // EMBED_API_BASE / EMBED_API_KEY / EMBED_MODEL / EMBED_DIM.
  static std::optional<HttpEmbeddingConfig> from_env();
};

/// POST {base}/embeddings with {"model", "input"}; reads data[0].embedding.
/// Throws ProviderUnavailable, QuotaExceeded or DimensionMismatch.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig config);
  std::size_t dimension() const override { return config_.dimension; }
  Vector embed(std::string_view text) const override;
  std::string name() const override { return "http:" + config_.model; }

  static Vector parse_response(const std::string& body, std::size_t dimension);

 private:
  HttpEmbeddingConfig config_;
};

// Returns false (and leaves v untouched) when v is the zero vector.
bool l2_normalize(Vector& v) noexcept;
double dot(const Vector& a, const Vector& b) noexcept;
// Cosine similarity; 0 when either side is the zero vector.
double cosine(const Vector& a, const Vector& b) noexcept;

}  // namespace goatrag::embed
