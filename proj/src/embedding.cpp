#include "goatrag/embedding.hpp"

#include <cmath>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"
#include "goatrag/text.hpp"
#include "http_util.hpp"

namespace goatrag::embed {

bool l2_normalize(Vector& v) noexcept {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) return false;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return true;
}

double dot(const Vector& a, const Vector& b) noexcept {
  const std::size_t n = std::min(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double cosine(const Vector& a, const Vector& b) noexcept {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dim_(dimension) {
  if (dim_ == 0) throw Error(ErrorCode::InvalidConfig, "embedding dimension must be positive");
}

Vector HashingEmbedder::embed(std::string_view input) const {
  Vector v(dim_, 0.0);
  for (const auto& tok : text::tokenize(input)) v[text::fnv1a(tok) % dim_] += 1.0;
  l2_normalize(v);
  return v;
}

std::optional<HttpEmbeddingConfig> HttpEmbeddingConfig::from_env() {
  const char* base = std::getenv("EMBED_API_BASE");
  if (!base || !*base) return std::nullopt;
  HttpEmbeddingConfig cfg;
  cfg.base_url = base;
  if (const char* key = std::getenv("EMBED_API_KEY")) cfg.api_key = key;
  if (const char* model = std::getenv("EMBED_MODEL"); model && *model) cfg.model = model;
  if (const char* dim = std::getenv("EMBED_DIM"); dim && *dim) {
    char* end = nullptr;
    const unsigned long long d = std::strtoull(dim, &end, 10);
    if (*end != '\0' || d == 0) throw Error(ErrorCode::InvalidConfig, "EMBED_DIM must be a positive integer", dim);
    cfg.dimension = static_cast<std::size_t>(d);
  }
  return cfg;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig config) : config_(std::move(config)) {
  http::parse_url(config_.base_url);
  if (config_.dimension == 0) throw Error(ErrorCode::InvalidConfig, "embedding dimension must be positive");
}

Vector HttpEmbeddingProvider::parse_response(const std::string& body, std::size_t dimension) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, "embedding response is not JSON", e.what());
  }
  if (!j.contains("data") || !j["data"].is_array() || j["data"].empty() ||
      !j["data"][0].contains("embedding") || !j["data"][0]["embedding"].is_array()) {
    throw Error(ErrorCode::ProviderUnavailable, "embedding response has no data[0].embedding");
  }
  Vector v;
  for (const auto& x : j["data"][0]["embedding"]) {
    if (!x.is_number()) throw Error(ErrorCode::ProviderUnavailable, "embedding has a non-numeric entry");
    v.push_back(x.get<double>());
  }
  if (v.size() != dimension) {
    throw Error(ErrorCode::DimensionMismatch, "provider returned " + std::to_string(v.size()) +
                                                  " dimensions, expected " + std::to_string(dimension));
  }
  l2_normalize(v);
  return v;
}

Vector HttpEmbeddingProvider::embed(std::string_view input) const {
  if (text::is_blank(input)) return Vector(config_.dimension, 0.0);
  const std::string body =
      nlohmann::json{{"model", config_.model}, {"input", std::string(input)}}.dump();
  std::map<std::string, std::string> headers;
  if (!config_.api_key.empty()) headers["Authorization"] = "Bearer " + config_.api_key;
  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto res = http::post_json(url + "/embeddings", body, headers, config_.timeout);
  if (res.failure != http::Failure::None) {
    throw Error(ErrorCode::ProviderUnavailable, "embedding provider unreachable", res.error);
  }
  if (res.status == 429) throw Error(ErrorCode::QuotaExceeded, "embedding provider rate limit", res.body);
  if (res.status / 100 != 2) {
    throw Error(ErrorCode::ProviderUnavailable,
                "embedding provider returned HTTP " + std::to_string(res.status), res.body);
  }
  return parse_response(res.body, config_.dimension);
}

}  // namespace goatrag::embed
