#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "goatrag/error.hpp"

namespace goatrag::llm {

// What a request is for. The HTTP backend ignores this (the instructions are
// in the prompt text); the mock backend uses it to pick its canned behavior.
enum class Purpose { Answer, QaGeneration, RowDescription };

struct ChatRequest {
  std::string system;
  std::string user;
  // Raw context texts in prompt order, mirrored here so deterministic
  // backends do not have to parse the rendered prompt.
  std::vector<std::string> context;
  // Section heading for QaGeneration requests.
  std::optional<std::string> subject;
  Purpose purpose = Purpose::Answer;
  double temperature = 0.0;
  int max_tokens = 512;
};

struct ChatResponse {
  std::string text;
  std::string finish_reason;
  double latency_ms = 0.0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Throws BackendUnavailable, Timeout or OversizePrompt.
  virtual ChatResponse complete(const ChatRequest& request) const = 0;
  virtual std::string name() const = 0;
};

/// Deterministic backend.
///  - Answer / RowDescription: "MOCK:" followed by the first sentence of each
///    context text, space separated.
///  - QaGeneration: one "Q: What does the section <subject> cover?" line and an
///    "A:" line holding the first two sentences of the context.
class MockBackend final : public Backend {
 public:
  MockBackend() = default;
  // Every call fails with `code` (BackendUnavailable or Timeout) when set.
  explicit MockBackend(std::optional<ErrorCode> fail_with) : fail_with_(fail_with) {}

  ChatResponse complete(const ChatRequest& request) const override;
  std::string name() const override { return "mock"; }

 private:
  std::optional<ErrorCode> fail_with_;
};

struct HttpChatConfig {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string api_key;
  std::string model = "qwen3-8b";
  std::chrono::milliseconds timeout{30000};
  std::size_t max_prompt_bytes = 200000;

  // LLM_API_BASE / LLM_API_KEY / LLM_MODEL; nullopt when LLM_API_BASE is unset.
  static std::optional<HttpChatConfig> from_env();
};

/// OpenAI-style chat-completion client: POST {base}/chat/completions.
class HttpChatBackend final : public Backend {
 public:
  explicit HttpChatBackend(HttpChatConfig config);
  ChatResponse complete(const ChatRequest& request) const override;
  std::string name() const override { return "http:" + config_.model; }

  // Exposed for tests of the wire format.
  static std::string request_body(const ChatRequest& request, const std::string& model);
  static ChatResponse parse_response(const std::string& body);

 private:
  HttpChatConfig config_;
};

}  // namespace goatrag::llm
