#include "goatrag/websearch.hpp"

#include <algorithm>
#include <cstdlib>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "goatrag/text.hpp"
#include "http_util.hpp"

namespace goatrag::websearch {

std::string_view to_string(TriggerReason r) noexcept {
  switch (r) {
    case TriggerReason::None: return "none";
    case TriggerReason::Disabled: return "disabled";
    case TriggerReason::Keyword: return "keyword";
    case TriggerReason::LowConfidence: return "low_confidence";
  }
  return "none";
}

TriggerDecision should_trigger(std::string_view query, const std::vector<double>& local_scores,
                               const TriggerConfig& config) {
  if (!config.enabled) return {false, TriggerReason::Disabled, {}};
  for (const auto& k : config.keywords) {
    if (!k.empty() && text::contains_ci(query, k)) return {true, TriggerReason::Keyword, k};
  }
  if (local_scores.empty()) return {true, TriggerReason::LowConfidence, {}};
  const double best = *std::max_element(local_scores.begin(), local_scores.end());
  if (best < config.confidence_threshold) return {true, TriggerReason::LowConfidence, {}};
  return {false, TriggerReason::None, {}};
}

std::optional<GoogleSearchConfig> GoogleSearchConfig::from_env() {
  const char* key = std::getenv("SEARCH_API_KEY");
  const char* cx = std::getenv("SEARCH_ENGINE_ID");
  if (!key || !*key || !cx || !*cx) return std::nullopt;
  GoogleSearchConfig cfg;
  cfg.api_key = key;
  cfg.engine_id = cx;
  return cfg;
}

GoogleSearchProvider::GoogleSearchProvider(GoogleSearchConfig config) : config_(std::move(config)) {
  http::parse_url(config_.endpoint);
}

std::vector<RawResult> GoogleSearchProvider::parse_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, "search response is not JSON", e.what());
  }
  std::vector<RawResult> out;
  if (!j.contains("items") || !j["items"].is_array()) return out;
  for (const auto& item : j["items"]) {
    RawResult r;
    r.title = item.value("title", "");
    r.url = item.value("link", "");
    r.snippet = item.value("snippet", "");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RawResult> GoogleSearchProvider::search(const std::string& query,
                                                    std::size_t max_results) const {
  const std::size_t num = std::clamp<std::size_t>(max_results, 1, 10);
  const std::string url = config_.endpoint + "?key=" + http::url_encode(config_.api_key) +
                          "&cx=" + http::url_encode(config_.engine_id) +
                          "&q=" + http::url_encode(query) + "&num=" + std::to_string(num);
  const auto res = http::get(url, {}, config_.timeout);
  if (res.failure != http::Failure::None) {
    throw Error(ErrorCode::ProviderUnavailable, "search provider unreachable", res.error);
  }
  if (res.status == 429 || (res.status == 403 && text::contains_ci(res.body, "quota"))) {
    throw Error(ErrorCode::QuotaExceeded, "search quota exceeded", res.body);
  }
  if (res.status / 100 != 2) {
    throw Error(ErrorCode::ProviderUnavailable,
                "search provider returned HTTP " + std::to_string(res.status), res.body);
  }
  return parse_response(res.body);
}

FixtureSearchProvider::FixtureSearchProvider(std::map<std::string, std::vector<RawResult>> results,
                                             std::optional<ErrorCode> fail_with)
    : results_(std::move(results)), fail_with_(fail_with) {}

FixtureSearchProvider::FixtureSearchProvider(FixtureSearchProvider&& other) noexcept
    : results_(std::move(other.results_)), fail_with_(other.fail_with_), log_(std::move(other.log_)) {}

std::vector<std::string> FixtureSearchProvider::log() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

FixtureSearchProvider FixtureSearchProvider::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::FormatError, "search fixture must be a JSON object");
  std::map<std::string, std::vector<RawResult>> results;
  for (const auto& [key, list] : j.items()) {
    if (!list.is_array()) throw Error(ErrorCode::FormatError, "search fixture entry '" + key + "' must be a list");
    auto& out = results[text::to_lower_ascii(key)];
    for (const auto& item : list) {
      out.push_back({item.value("title", ""), item.value("url", ""), item.value("snippet", "")});
    }
  }
  return FixtureSearchProvider(std::move(results));
}

std::vector<RawResult> FixtureSearchProvider::search(const std::string& query,
                                                     std::size_t max_results) const {
  {
    std::lock_guard lock(log_mutex_);
    log_.push_back(query);
  }
  if (fail_with_) throw Error(*fail_with_, "fixture search provider configured to fail");
  for (const auto& [key, list] : results_) {
    if (!text::contains_ci(query, key)) continue;
    std::vector<RawResult> out(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(
                                                               std::min(max_results, list.size())));
    return out;
  }
  return {};
}

std::optional<std::string> url_host(std::string_view url) {
  std::size_t start;
  if (url.starts_with("https://")) {
    start = 8;
  } else if (url.starts_with("http://")) {
    start = 7;
  } else {
    return std::nullopt;
  }
  const std::size_t end = url.find_first_of("/?#", start);
  std::string_view authority = url.substr(start, end == std::string_view::npos ? url.npos : end - start);
  if (const auto at = authority.rfind('@'); at != authority.npos) authority.remove_prefix(at + 1);
  if (const auto colon = authority.find(':'); colon != authority.npos) {
    const auto port = authority.substr(colon + 1);
    if (port.empty() || !std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::nullopt;
    }
    authority = authority.substr(0, colon);
  }
  if (authority.empty() || authority.front() == '.' || authority.back() == '.') return std::nullopt;
  for (char c : authority) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '.';
    if (!ok) return std::nullopt;
  }
  if (authority.find("..") != authority.npos) return std::nullopt;
  return text::to_lower_ascii(authority);
}

bool Allowlist::matches(std::string_view host) const {
  const std::string h = text::to_lower_ascii(host);
  for (const auto& s : suffixes) {
    if (h == s) return true;
    if (h.size() > s.size() && h.ends_with(s) && h[h.size() - s.size() - 1] == '.') return true;
  }
  return false;
}

Allowlist Allowlist::parse(std::string_view content) {
  Allowlist a;
  const std::string normalized = text::normalize_line_endings(content);
  for (auto line : text::split_lines(normalized)) {
    if (const auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
    line = text::trim(line);
    while (!line.empty() && line.front() == '.') line.remove_prefix(1);
    if (!line.empty()) a.suffixes.push_back(text::to_lower_ascii(line));
  }
  return a;
}

std::string augment_query(std::string_view query, const std::vector<std::string>& local_headings) {
  std::string q = text::collapse_whitespace(query);
  std::size_t used = 0;
  for (const auto& h : local_headings) {
    if (used == 2) break;
    const std::string t = text::collapse_whitespace(h);
    if (t.empty() || text::contains_ci(q, t)) continue;
    q += " " + t;
    ++used;
  }
  return q;
}

std::vector<WebResult> web_search(const SearchProvider& provider, std::string_view query,
                                  const std::vector<std::string>& local_headings,
                                  const Allowlist& allowlist, std::size_t max_results) {
  const auto raw = provider.search(augment_query(query, local_headings), std::max<std::size_t>(max_results, 10));
  std::vector<WebResult> kept;
  for (const auto& r : raw) {
    const auto host = url_host(r.url);
    if (!host || text::is_blank(r.snippet)) continue;
    WebResult w;
    w.title = text::collapse_whitespace(r.title);
    w.url = std::string(text::trim(r.url));
    w.snippet = text::collapse_whitespace(r.snippet);
    w.authoritative = allowlist.matches(*host);
    kept.push_back(std::move(w));
  }
  std::stable_partition(kept.begin(), kept.end(), [](const WebResult& w) { return w.authoritative; });
  if (kept.size() > max_results) kept.resize(max_results);
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i].source_rank = i + 1;
  return kept;
}

std::vector<ContextBlock> merge_context(std::vector<ContextBlock> local,
                                        const std::vector<WebResult>& web) {
  std::unordered_set<std::string> seen;
  std::vector<ContextBlock> out;
  for (auto& b : local) {
    seen.insert(text::collapse_whitespace(b.text));
    out.push_back(std::move(b));
  }
  for (const auto& w : web) {
    if (!seen.insert(text::collapse_whitespace(w.snippet)).second) continue;
    out.push_back({w.snippet, w.url, true, 0.0});
  }
  return out;
}

void to_json(nlohmann::json& j, const WebResult& r) {
  j = {{"title", r.title}, {"url", r.url}, {"snippet", r.snippet}, {"source_rank", r.source_rank},
       {"authoritative", r.authoritative}};
}

}  // namespace goatrag::websearch
