#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "goatrag/embedding.hpp"
#include "goatrag/experiment.hpp"
#include "goatrag/generate.hpp"
#include "goatrag/llm.hpp"
#include "goatrag/retrieval.hpp"
#include "goatrag/session.hpp"
#include "goatrag/treex.hpp"
#include "goatrag/websearch.hpp"

namespace goatrag::service {

/// Every key is optional; see config/goatrag.json for the full set with
/// defaults.
struct ServiceConfig {
  std::string workspace = ".goatrag";

  retrieval::HybridConfig retrieval;
  retrieval::Bm25Params bm25;  // applied when an index is built

  websearch::TriggerConfig trigger;
  std::size_t web_results = 5;
  std::string search_provider = "none";  // none | google | fixture
  std::string search_fixture;            // JSON file for the fixture provider
  std::string allowlist;                 // suffix file

  TreeMode tree_mode = TreeMode::StateMachine;
  std::size_t routing_min_overlap = 1;

  std::string llm_backend = "mock";  // mock | http
  std::string llm_base_url;          // falls back to LLM_API_BASE
  std::string llm_model = "qwen3-8b";
  std::chrono::milliseconds llm_timeout{30000};

  std::string embedder = "hash";  // hash | http
  std::size_t embedding_dimension = 1024;
  std::string embed_base_url;  // falls back to EMBED_API_BASE
  std::string embed_model = "text-embedding-3-small";

  std::string prompt_template = "builtin";  // or a template file path
  std::size_t prompt_budget = 16000;

  std::chrono::seconds session_ttl{1800};
  std::string session_store;  // empty = memory only

  std::string host = "127.0.0.1";
  int port = 8080;

  /// Throws InvalidConfig naming the field ("retrieval.alpha: must be in
  /// [0, 1]") for unknown keys, wrong types and out-of-range values.
  static ServiceConfig from_json(const nlohmann::json& j);
  static ServiceConfig load_file(const std::string& path);
  void validate() const;
  nlohmann::json to_json() const;

  // Full-pipeline configuration used for /ask.
  ExperimentConfig experiment() const;
};

struct Providers {
  std::shared_ptr<const llm::Backend> backend;
  std::shared_ptr<const embed::EmbeddingProvider> embedder;
  std::shared_ptr<const websearch::SearchProvider> search;
  websearch::Allowlist allowlist;
  generate::PromptTemplate prompt_template = generate::PromptTemplate::builtin();

  // Mock or HTTP backends per the config, with the environment supplying
  // endpoints and keys. Throws InvalidConfig when an HTTP backend has no URL.
  static Providers from_config(const ServiceConfig& config);
};

/// An immutable view of the knowledge base; replaced as a whole on ingest.
struct Snapshot {
  std::optional<retrieval::Index> index;
  std::vector<treex::DecisionTree> trees;
  std::string version() const;
  const treex::DecisionTree* tree(const std::string& id) const;
};

/// Loads the index (when present) and trees of a workspace directory.
std::shared_ptr<const Snapshot> load_snapshot(const std::string& workspace_dir);

/// Transport-independent request handling; every method takes and returns the
/// JSON bodies of the HTTP API and throws goatrag::Error.
class Service {
 public:
  Service(ServiceConfig config, Providers providers, Clock clock = nullptr);

  void install(std::shared_ptr<const Snapshot> snapshot);
  std::shared_ptr<const Snapshot> snapshot() const;

  /// {question, session_id?, domain?, kinds?, experiment?, alpha?, top_k?}
  nlohmann::json ask(const nlohmann::json& request);
  /// {assignments: {attribute: label}}
  nlohmann::json submit_evidence(const std::string& session_id, const nlohmann::json& body);
  nlohmann::json session(const std::string& session_id) const;
  nlohmann::json health() const;
  /// Rebuilds the knowledge base from uploaded files (name -> content),
  /// writes it to the workspace and swaps it in.
  nlohmann::json ingest(const std::map<std::string, std::string>& files);

  const ServiceConfig& config() const noexcept { return config_; }
  SessionStore& sessions() noexcept { return sessions_; }

 private:
  nlohmann::json advance(const std::string& session_id, const treex::Evidence& assignments,
                         const std::string& user_text);

  ServiceConfig config_;
  Providers providers_;
  SessionStore sessions_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::mutex ingest_mutex_;
};

// HTTP status for an error code.
int http_status(ErrorCode code) noexcept;
nlohmann::json error_body(const Error& e);

/// POST /ask, POST /sessions/{id}/evidence, GET /sessions/{id},
/// POST /ingest (multipart), GET /healthz.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds to host:port (port 0 picks a free one) and returns the port.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void run();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace goatrag::service
