#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "goatrag/error.hpp"

namespace goatrag::websearch {

struct TriggerConfig {
  bool enabled = true;
  double confidence_threshold = 0.35;
  // Case-insensitive phrases that force a web lookup.
  std::vector<std::string> keywords = {"latest research", "real-time data"};
};

enum class TriggerReason { None, Disabled, Keyword, LowConfidence };

struct TriggerDecision {
  bool fire = false;
  TriggerReason reason = TriggerReason::None;
  std::string keyword;  // the matched phrase for Keyword
};

std::string_view to_string(TriggerReason r) noexcept;

/// Keywords are checked first; otherwise the lookup fires when there are no
/// local hits or the best fused score is below the threshold.
TriggerDecision should_trigger(std::string_view query, const std::vector<double>& local_scores,
                               const TriggerConfig& config);

struct RawResult {
  std::string title;
  std::string url;
  std::string snippet;
};

class SearchProvider {
 public:
  virtual ~SearchProvider() = default;
  // Throws ProviderUnavailable or QuotaExceeded.
  virtual std::vector<RawResult> search(const std::string& query, std::size_t max_results) const = 0;
  virtual std::string name() const = 0;
};

struct GoogleSearchConfig {
  std::string api_key;
  std::string engine_id;
  std::string endpoint = "https://www.googleapis.com/customsearch/v1";
  std::chrono::milliseconds timeout{10000};

  // SEARCH_API_KEY / SEARCH_ENGINE_ID; nullopt unless both are set.
  static std::optional<GoogleSearchConfig> from_env();
};

/// Google Programmable Search JSON API.
class GoogleSearchProvider final : public SearchProvider {
 public:
  explicit GoogleSearchProvider(GoogleSearchConfig config);
  std::vector<RawResult> search(const std::string& query, std::size_t max_results) const override;
  std::string name() const override { return "google-cse"; }

  static std::vector<RawResult> parse_response(const std::string& body);

 private:
  GoogleSearchConfig config_;
};

/// Canned results keyed by lowercase substrings of the query; the first key
/// (in map order) contained in the query wins.
class FixtureSearchProvider final : public SearchProvider {
 public:
  FixtureSearchProvider() = default;
  explicit FixtureSearchProvider(std::map<std::string, std::vector<RawResult>> results,
                                 std::optional<ErrorCode> fail_with = std::nullopt);
  /// {"<key>": [{"title", "url", "snippet"}], ...}
  static FixtureSearchProvider from_json(const nlohmann::json& j);

  std::vector<RawResult> search(const std::string& query, std::size_t max_results) const override;
  std::string name() const override { return "fixture"; }

  FixtureSearchProvider(FixtureSearchProvider&& other) noexcept;

  // Queries received, in order.
  std::vector<std::string> log() const;

 private:
  std::map<std::string, std::vector<RawResult>> results_;
  std::optional<ErrorCode> fail_with_;
  mutable std::mutex log_mutex_;
  mutable std::vector<std::string> log_;
};

struct WebResult {
  std::string title;
  std::string url;
  std::string snippet;
  std::size_t source_rank = 0;  // 1-based, after authority ordering
  bool authoritative = false;
};

/// Host suffixes ranked ahead of other results ("fao.org", "edu").
struct Allowlist {
  std::vector<std::string> suffixes;
  bool matches(std::string_view host) const;
  // One suffix per line; '#' starts a comment.
  static Allowlist parse(std::string_view content);
};

std::optional<std::string> url_host(std::string_view url);

/// Augments the query with up to two local headings, asks the provider,
/// drops results with malformed URLs or blank snippets, moves allowlisted
/// hosts first (stable) and keeps at most `max_results`.
std::vector<WebResult> web_search(const SearchProvider& provider, std::string_view query,
                                  const std::vector<std::string>& local_headings,
                                  const Allowlist& allowlist, std::size_t max_results = 5);

std::string augment_query(std::string_view query, const std::vector<std::string>& local_headings);

struct ContextBlock {
  std::string text;
  std::string provenance;
  bool from_web = false;
  double score = 0.0;  // fused score for local blocks
};

/// Local blocks first in rank order, then web blocks in source rank order. A
/// web block whose text equals a block already kept is dropped.
std::vector<ContextBlock> merge_context(std::vector<ContextBlock> local,
                                        const std::vector<WebResult>& web);

void to_json(nlohmann::json& j, const WebResult& r);

}  // namespace goatrag::websearch
