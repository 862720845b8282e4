#include "goatrag/llm.hpp"

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "goatrag/text.hpp"
#include "http_util.hpp"

namespace goatrag::llm {

using nlohmann::json;

ChatResponse MockBackend::complete(const ChatRequest& request) const {
  if (fail_with_) throw Error(*fail_with_, "mock backend configured to fail");
  ChatResponse resp;
  resp.finish_reason = "stop";
  if (request.purpose == Purpose::QaGeneration) {
    std::string body;
    for (const auto& c : request.context) {
      if (!body.empty()) body.push_back(' ');
      body += c;
    }
    const auto sentences = text::split_sentences(body);
    std::string answer;
    for (std::size_t i = 0; i < sentences.size() && i < 2; ++i) {
      if (i) answer.push_back(' ');
      answer += sentences[i];
    }
    const std::string section = request.subject ? "the section " + *request.subject
                                                : std::string("the opening section");
    resp.text = "Q: What does " + section + " cover?\nA: " + answer;
    return resp;
  }
  resp.text = "MOCK:";
  for (const auto& c : request.context) {
    const std::string s = text::first_sentence(c);
    if (s.empty()) continue;
    resp.text.push_back(' ');
    resp.text += s;
  }
  return resp;
}

std::optional<HttpChatConfig> HttpChatConfig::from_env() {
  const char* base = std::getenv("LLM_API_BASE");
  if (!base || !*base) return std::nullopt;
  HttpChatConfig cfg;
  cfg.base_url = base;
  if (const char* key = std::getenv("LLM_API_KEY")) cfg.api_key = key;
  if (const char* model = std::getenv("LLM_MODEL"); model && *model) cfg.model = model;
  return cfg;
}

HttpChatBackend::HttpChatBackend(HttpChatConfig config) : config_(std::move(config)) {
  http::parse_url(config_.base_url);
}

std::string HttpChatBackend::request_body(const ChatRequest& request, const std::string& model) {
  json messages = json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  return json{{"model", model},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}}
      .dump();
}

ChatResponse HttpChatBackend::parse_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BackendUnavailable, "chat response is not JSON", e.what());
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw Error(ErrorCode::BackendUnavailable, "chat response has no choices", body);
  }
  const auto& choice = j["choices"][0];
  ChatResponse resp;
  if (choice.contains("message") && choice["message"].contains("content") &&
      choice["message"]["content"].is_string()) {
    resp.text = choice["message"]["content"].get<std::string>();
  }
  if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
    resp.finish_reason = choice["finish_reason"].get<std::string>();
  }
  if (text::is_blank(resp.text)) {
    throw Error(ErrorCode::BackendUnavailable, "chat response text is empty", body);
  }
  return resp;
}

ChatResponse HttpChatBackend::complete(const ChatRequest& request) const {
  const std::string body = request_body(request, config_.model);
  if (body.size() > config_.max_prompt_bytes) {
    throw Error(ErrorCode::OversizePrompt, "request of " + std::to_string(body.size()) +
                                               " bytes exceeds backend limit");
  }
  std::map<std::string, std::string> headers;
  if (!config_.api_key.empty()) headers["Authorization"] = "Bearer " + config_.api_key;

  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  url += "/chat/completions";

  const auto start = std::chrono::steady_clock::now();
  const auto res = http::post_json(url, body, headers, config_.timeout);
  const auto elapsed = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  switch (res.failure) {
    case http::Failure::None:
      break;
    case http::Failure::Timeout:
      throw Error(ErrorCode::Timeout, "chat backend timed out", res.error);
    default:
      throw Error(ErrorCode::BackendUnavailable, "chat backend unreachable", res.error);
  }
  if (res.status == 413) throw Error(ErrorCode::OversizePrompt, "backend rejected prompt size");
  if (res.status == 408 || res.status == 504) {
    throw Error(ErrorCode::Timeout, "chat backend timed out", std::to_string(res.status));
  }
  if (res.status / 100 != 2) {
    throw Error(ErrorCode::BackendUnavailable,
                "chat backend returned HTTP " + std::to_string(res.status), res.body);
  }
  auto resp = parse_response(res.body);
  resp.latency_ms = elapsed;
  return resp;
}

}  // namespace goatrag::llm
