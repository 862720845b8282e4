#include "goatrag/service.hpp"

#include <cstdlib>
#include <filesystem>
#include <set>

#include "goatrag/error.hpp"
#include "goatrag/pipeline.hpp"
#include "goatrag/text.hpp"
#include "goatrag/workspace.hpp"

namespace goatrag::service {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- configuration ----

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::InvalidConfig, field + ": " + msg, field);
}

// Walks one JSON object, remembering which keys were read so that leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) invalid(path_.empty() ? "<root>" : path_, "expected an object");
  }
  ~Section() = default;

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  void number(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) invalid(field(key), "expected a number");
      out = v->get<double>();
    }
  }
  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer() && !v->is_number_unsigned()) invalid(field(key), "expected an integer");
      const auto x = v->get<long long>();
      if (x < 0) invalid(field(key), "must not be negative");
      out = static_cast<Int>(x);
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) invalid(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const json* v = get(key)) {
      if (v->is_null()) {
        out.clear();
        return;
      }
      if (!v->is_string()) invalid(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void strings(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = get(key)) {
      if (!v->is_array()) invalid(field(key), "expected a list of strings");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_string()) invalid(field(key), "expected a list of strings");
        out.push_back(x.get<std::string>());
      }
    }
  }
  std::optional<Section> child(const std::string& key) {
    if (const json* v = get(key)) return Section(*v, field(key));
    return std::nullopt;
  }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) invalid(field(k), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

ServiceConfig ServiceConfig::from_json(const json& j) {
  ServiceConfig c;
  Section root(j, "");
  root.string("workspace", c.workspace);
  if (auto s = root.child("retrieval")) {
    s->number("alpha", c.retrieval.alpha);
    s->integer("top_k", c.retrieval.top_k);
    s->number("k1", c.bm25.k1);
    s->number("b", c.bm25.b);
    std::string fusion = "normalized";
    s->string("fusion", fusion);
    if (fusion == "raw") c.retrieval.mode = retrieval::FusionMode::Raw;
    else if (fusion == "normalized") c.retrieval.mode = retrieval::FusionMode::Normalized;
    else invalid("retrieval.fusion", "must be 'raw' or 'normalized'");
    s->finish();
  }
  if (auto s = root.child("web")) {
    s->boolean("enabled", c.trigger.enabled);
    s->number("confidence_threshold", c.trigger.confidence_threshold);
    s->strings("keywords", c.trigger.keywords);
    s->integer("max_results", c.web_results);
    s->string("provider", c.search_provider);
    s->string("fixture", c.search_fixture);
    s->string("allowlist", c.allowlist);
    s->finish();
  }
  if (auto s = root.child("trees")) {
    std::string mode(to_string(c.tree_mode));
    s->string("mode", mode);
    try {
      c.tree_mode = tree_mode_from_string(mode);
    } catch (const Error&) {
      invalid("trees.mode", "must be 'indexed' or 'state_machine'");
    }
    s->integer("routing_min_overlap", c.routing_min_overlap);
    s->finish();
  }
  if (auto s = root.child("llm")) {
    s->string("backend", c.llm_backend);
    s->string("base_url", c.llm_base_url);
    s->string("model", c.llm_model);
    long long ms = c.llm_timeout.count();
    s->integer("timeout_ms", ms);
    c.llm_timeout = std::chrono::milliseconds(ms);
    s->finish();
  }
  if (auto s = root.child("embedding")) {
    s->string("provider", c.embedder);
    s->integer("dimension", c.embedding_dimension);
    s->string("base_url", c.embed_base_url);
    s->string("model", c.embed_model);
    s->finish();
  }
  if (auto s = root.child("prompt")) {
    s->string("template", c.prompt_template);
    s->integer("budget_bytes", c.prompt_budget);
    s->finish();
  }
  if (auto s = root.child("sessions")) {
    long long ttl = c.session_ttl.count();
    s->integer("ttl_seconds", ttl);
    c.session_ttl = std::chrono::seconds(ttl);
    s->string("store", c.session_store);
    s->finish();
  }
  if (auto s = root.child("server")) {
    s->string("host", c.host);
    s->integer("port", c.port);
    s->finish();
  }
  root.finish();
  c.validate();
  return c;
}

ServiceConfig ServiceConfig::load_file(const std::string& path) {
  json j;
  try {
    j = json::parse(workspace::read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path + ": not valid JSON", e.what());
  }
  ServiceConfig c;
  try {
    c = from_json(j);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what(), e.detail());
  }
  // Data files named in the config are relative to the config file.
  const auto base = std::filesystem::path(path).parent_path();
  auto rebase = [&](std::string& f) {
    if (!f.empty() && std::filesystem::path(f).is_relative()) f = (base / f).lexically_normal().string();
  };
  rebase(c.search_fixture);
  rebase(c.allowlist);
  if (c.prompt_template != "builtin") rebase(c.prompt_template);
  return c;
}

void ServiceConfig::validate() const {
  try {
    experiment().validate();
  } catch (const Error& e) {
    // The experiment validator names its own fields; map them to config keys.
    const std::string f = e.detail();
    const std::string key = f == "trigger.confidence_threshold" ? "web.confidence_threshold"
                            : f.starts_with("bm25.")            ? "retrieval." + f.substr(5)
                            : f == "web_results"                ? "web.max_results"
                                                                : f;
    invalid(key, std::string(e.what()).substr(f.size() + 2));
  }
  if (llm_backend != "mock" && llm_backend != "http") invalid("llm.backend", "must be 'mock' or 'http'");
  if (embedder != "hash" && embedder != "http") invalid("embedding.provider", "must be 'hash' or 'http'");
  if (embedding_dimension == 0) invalid("embedding.dimension", "must be a positive integer");
  if (search_provider != "none" && search_provider != "google" && search_provider != "fixture") {
    invalid("web.provider", "must be 'none', 'google' or 'fixture'");
  }
  if (search_provider == "fixture" && search_fixture.empty()) invalid("web.fixture", "required for the fixture provider");
  if (prompt_budget == 0) invalid("prompt.budget_bytes", "must be a positive integer");
  if (session_ttl.count() <= 0) invalid("sessions.ttl_seconds", "must be positive");
  if (llm_timeout.count() <= 0) invalid("llm.timeout_ms", "must be positive");
  if (port < 0 || port > 65535) invalid("server.port", "must be in [0, 65535]");
}

json ServiceConfig::to_json() const {
  return {{"workspace", workspace},
          {"retrieval",
           {{"alpha", retrieval.alpha},
            {"top_k", retrieval.top_k},
            {"k1", bm25.k1},
            {"b", bm25.b},
            {"fusion", retrieval.mode == retrieval::FusionMode::Raw ? "raw" : "normalized"}}},
          {"web",
           {{"enabled", trigger.enabled},
            {"confidence_threshold", trigger.confidence_threshold},
            {"keywords", trigger.keywords},
            {"max_results", web_results},
            {"provider", search_provider},
            {"fixture", search_fixture},
            {"allowlist", allowlist}}},
          {"trees", {{"mode", goatrag::to_string(tree_mode)}, {"routing_min_overlap", routing_min_overlap}}},
          {"llm",
           {{"backend", llm_backend},
            {"base_url", llm_base_url},
            {"model", llm_model},
            {"timeout_ms", llm_timeout.count()}}},
          {"embedding",
           {{"provider", embedder},
            {"dimension", embedding_dimension},
            {"base_url", embed_base_url},
            {"model", embed_model}}},
          {"prompt", {{"template", prompt_template}, {"budget_bytes", prompt_budget}}},
          {"sessions", {{"ttl_seconds", session_ttl.count()}, {"store", session_store}}},
          {"server", {{"host", host}, {"port", port}}}};
}

ExperimentConfig ServiceConfig::experiment() const {
  ExperimentConfig e;
  e.id = "service";
  e.toggles = {true, true, true, trigger.enabled};
  e.retrieval = retrieval;
  e.bm25 = bm25;
  e.trigger = trigger;
  e.tree_mode = tree_mode;
  e.routing_min_overlap = routing_min_overlap;
  e.web_results = web_results;
  e.repetitions = 1;
  return e;
}

Providers Providers::from_config(const ServiceConfig& c) {
  Providers p;
  if (c.llm_backend == "http") {
    auto cfg = llm::HttpChatConfig::from_env().value_or(llm::HttpChatConfig{});
    if (!c.llm_base_url.empty()) cfg.base_url = c.llm_base_url;
    if (cfg.base_url.empty()) invalid("llm.base_url", "required for the http backend (or set LLM_API_BASE)");
    if (!std::getenv("LLM_MODEL")) cfg.model = c.llm_model;
    cfg.timeout = c.llm_timeout;
    p.backend = std::make_shared<llm::HttpChatBackend>(cfg);
  } else {
    p.backend = std::make_shared<llm::MockBackend>();
  }
  if (c.embedder == "http") {
    auto cfg = embed::HttpEmbeddingConfig::from_env().value_or(embed::HttpEmbeddingConfig{});
    if (!c.embed_base_url.empty()) cfg.base_url = c.embed_base_url;
    if (cfg.base_url.empty()) invalid("embedding.base_url", "required for the http provider (or set EMBED_API_BASE)");
    if (!std::getenv("EMBED_MODEL")) cfg.model = c.embed_model;
    if (!std::getenv("EMBED_DIM")) cfg.dimension = c.embedding_dimension;
    p.embedder = std::make_shared<embed::HttpEmbeddingProvider>(cfg);
  } else {
    p.embedder = std::make_shared<embed::HashingEmbedder>(c.embedding_dimension);
  }
  if (c.search_provider == "google") {
    auto cfg = websearch::GoogleSearchConfig::from_env();
    if (!cfg) invalid("web.provider", "google needs SEARCH_API_KEY and SEARCH_ENGINE_ID");
    p.search = std::make_shared<websearch::GoogleSearchProvider>(*cfg);
  } else if (c.search_provider == "fixture") {
    json j;
    try {
      j = json::parse(workspace::read_file(c.search_fixture));
    } catch (const json::exception& e) {
      invalid("web.fixture", std::string("not valid JSON: ") + e.what());
    }
    p.search = std::make_shared<websearch::FixtureSearchProvider>(websearch::FixtureSearchProvider::from_json(j));
  }
  if (!c.allowlist.empty()) p.allowlist = websearch::Allowlist::parse(workspace::read_file(c.allowlist));
  if (c.prompt_template != "builtin") p.prompt_template = generate::PromptTemplate::load_file(c.prompt_template);
  return p;
}

// ---- knowledge snapshots ----

std::string Snapshot::version() const {
  std::string v = index ? index->version() : std::string("none");
  for (const auto& t : trees) v += "+" + t.id();
  return trees.empty() ? v : text::hex64(text::fnv1a(v)).substr(0, 16);
}

const treex::DecisionTree* Snapshot::tree(const std::string& id) const {
  for (const auto& t : trees) {
    if (t.id() == id) return &t;
  }
  return nullptr;
}

std::shared_ptr<const Snapshot> load_snapshot(const std::string& workspace_dir) {
  workspace::Workspace ws(workspace_dir);
  auto snap = std::make_shared<Snapshot>();
  if (ws.has(ws.index_path())) snap->index = retrieval::Index::load_file(ws.index_path().string());
  if (ws.has(ws.sources_path())) snap->trees = ws.load_sources().trees;
  return snap;
}

// ---- request handling ----

Service::Service(ServiceConfig config, Providers providers, Clock clock)
    : config_(std::move(config)),
      providers_(std::move(providers)),
      sessions_(config_.session_ttl, std::move(clock),
                config_.session_store.empty() ? std::nullopt : std::optional<std::string>(config_.session_store)),
      snapshot_(std::make_shared<Snapshot>()) {}

void Service::install(std::shared_ptr<const Snapshot> snapshot) {
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(snapshot);
}

std::shared_ptr<const Snapshot> Service::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

namespace {

std::string required_question(const json& req) {
  if (!req.is_object()) throw Error(ErrorCode::FormatError, "request body must be a JSON object");
  if (!req.contains("question") || !req["question"].is_string()) {
    throw Error(ErrorCode::FormatError, "'question' must be a string", "question");
  }
  const auto q = req["question"].get<std::string>();
  if (text::is_blank(q)) throw Error(ErrorCode::EmptyQuery, "question is empty", "question");
  return q;
}

treex::Evidence parse_assignments(const json& body) {
  if (!body.is_object() || !body.contains("assignments") || !body["assignments"].is_object()) {
    throw Error(ErrorCode::FormatError, "'assignments' must be an object of attribute -> label", "assignments");
  }
  treex::Evidence ev;
  for (const auto& [k, v] : body["assignments"].items()) {
    if (!v.is_string()) throw Error(ErrorCode::FormatError, "assignment '" + k + "' must be a string", k);
    ev[k] = v.get<std::string>();
  }
  return ev;
}

std::string describe(const treex::Evidence& ev) {
  std::vector<std::string> parts;
  for (const auto& [k, v] : ev) parts.push_back(k + ": " + v);
  return text::join(parts, "; ");
}

}  // namespace

json Service::ask(const json& request) {
  const std::string question = required_question(request);
  if (request.contains("session_id") && !request["session_id"].is_null()) {
    if (!request["session_id"].is_string()) throw Error(ErrorCode::FormatError, "'session_id' must be a string");
    const std::string id = request["session_id"].get<std::string>();
    const Session s = sessions_.get(id);
    const auto snap = snapshot();
    const auto* tree = snap->tree(s.tree_id);
    if (!tree) throw Error(ErrorCode::MissingComponent, "tree '" + s.tree_id + "' is no longer loaded");
    return advance(id, treex::extract_evidence(*tree, question), question);
  }

  ExperimentConfig cfg = config_.experiment();
  if (request.contains("experiment") && request["experiment"].is_string()) {
    const auto preset = ExperimentConfig::preset(request["experiment"].get<std::string>());
    cfg.toggles = preset.toggles;
    cfg.id = preset.id;
    cfg.trigger.enabled = cfg.toggles.web_search && config_.trigger.enabled;
  }
  if (request.contains("alpha")) {
    if (!request["alpha"].is_number()) throw Error(ErrorCode::FormatError, "'alpha' must be a number", "alpha");
    cfg.retrieval.alpha = request["alpha"].get<double>();
  }
  if (request.contains("top_k")) {
    if (!request["top_k"].is_number_unsigned()) throw Error(ErrorCode::FormatError, "'top_k' must be a positive integer", "top_k");
    cfg.retrieval.top_k = request["top_k"].get<std::size_t>();
  }
  cfg.validate();

  retrieval::Filter filter;
  if (request.contains("domain") && !request["domain"].is_null()) {
    if (!request["domain"].is_string()) throw Error(ErrorCode::FormatError, "'domain' must be a string", "domain");
    filter.domains.insert(domain_from_string(request["domain"].get<std::string>(), "domain"));
  }
  if (request.contains("kinds") && request["kinds"].is_array()) {
    for (const auto& k : request["kinds"]) filter.kinds.insert(source_kind_from_string(k.get<std::string>(), "kinds"));
  }

  const auto snap = snapshot();
  pipeline::Resources res;
  res.index = snap->index ? &*snap->index : nullptr;
  res.embedder = providers_.embedder.get();
  res.backend = providers_.backend.get();
  res.search = providers_.search.get();
  res.allowlist = &providers_.allowlist;
  res.prompt_template = providers_.prompt_template;
  res.prompt_budget = config_.prompt_budget;
  for (const auto& t : snap->trees) res.trees.push_back(&t);
  if (cfg.toggles.web_search && !res.search) cfg.toggles.web_search = false;

  const auto result = pipeline::run(res, question, cfg, filter);
  json out = result.to_json();
  out["session_id"] = nullptr;
  if (result.route == "tree") {
    Session s;
    s.tree_id = result.tree_id;
    s.evidence = result.evidence;
    s.transcript = {{"user", question, 0}, {"assistant", result.answer, 0}};
    s.state = result.diagnosis ? SessionState::Diagnosed : SessionState::Open;
    const auto id = sessions_.create(std::move(s));
    out["session_id"] = id;
    out["session_state"] = to_string(result.diagnosis ? SessionState::Diagnosed : SessionState::Open);
  }
  return out;
}

json Service::advance(const std::string& session_id, const treex::Evidence& assignments,
                      const std::string& user_text) {
  const auto snap = snapshot();
  pipeline::Result result;
  const Session updated = sessions_.update(session_id, [&](Session& s) {
    const auto* tree = snap->tree(s.tree_id);
    if (!tree) throw Error(ErrorCode::MissingComponent, "tree '" + s.tree_id + "' is no longer loaded");
    treex::Evidence merged = s.evidence;
    for (const auto& [attr, label] : assignments) {
      auto it = merged.find(attr);
      if (it != merged.end() && it->second != label) {
        throw Error(ErrorCode::ContradictoryEvidence,
                    "attribute '" + attr + "' is already '" + it->second + "'", attr);
      }
      merged[attr] = label;
    }
    result = pipeline::answer_from_tree(*tree, merged);
    s.evidence = std::move(merged);
    s.transcript.push_back({"user", user_text, 0});
    s.transcript.push_back({"assistant", result.answer, 0});
    if (result.diagnosis) s.state = SessionState::Diagnosed;
  });
  json out = result.to_json();
  out["session_id"] = session_id;
  out["session_state"] = to_string(updated.state);
  return out;
}

json Service::submit_evidence(const std::string& session_id, const json& body) {
  const auto ev = parse_assignments(body);
  return advance(session_id, ev, describe(ev));
}

json Service::session(const std::string& session_id) const { return json(sessions_.get(session_id)); }

json Service::health() const {
  const auto snap = snapshot();
  return {{"status", snap->index ? "ok" : "degraded"},
          {"index_version", snap->index ? json(snap->version()) : json(nullptr)},
          {"chunks", snap->index ? snap->index->size() : 0},
          {"trees", snap->trees.size()}};
}

json Service::ingest(const std::map<std::string, std::string>& files) {
  std::lock_guard lock(ingest_mutex_);
  const auto sources = workspace::load_uploads(files);
  const auto knowledge = workspace::textualize(sources, tablex::TemplateParser{});
  auto snap = std::make_shared<Snapshot>();
  snap->index = retrieval::Index::build(retrieval::chunks_of(knowledge.documents), *providers_.embedder,
                                        config_.bm25);
  snap->trees = sources.trees;
  if (!config_.workspace.empty()) {
    workspace::Workspace ws(config_.workspace);
    ws.save_sources(sources);
    ws.save_knowledge(knowledge);
    snap->index->save_file(ws.index_path().string());
  }
  install(snap);
  return {{"status", "ok"},
          {"index_version", snap->version()},
          {"articles", sources.articles.size()},
          {"tables", sources.tables.size()},
          {"trees", sources.trees.size()},
          {"chunks", snap->index->size()}};
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::SessionClosed: return 409;
    case ErrorCode::OversizePrompt: return 413;
    case ErrorCode::UnknownAttribute:
    case ErrorCode::UnknownValue:
    case ErrorCode::ContradictoryEvidence: return 422;
    case ErrorCode::IndexUnavailable:
    case ErrorCode::MissingComponent: return 503;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::ParserUnavailable:
    case ErrorCode::QuotaExceeded: return 502;
    case ErrorCode::Timeout: return 504;
    case ErrorCode::IoError: return 500;
    default: return 400;
  }
}

json error_body(const Error& e) {
  return {{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}};
}

}  // namespace goatrag::service
