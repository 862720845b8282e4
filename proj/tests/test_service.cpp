#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"
#include "goatrag/service.hpp"
#include "goatrag/workspace.hpp"
#include "support/fixtures.hpp"

using namespace goatrag;
using namespace goatrag::service;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::IoError;
}

std::map<std::string, std::string> sample_files() {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(fixture::sample_dir())) {
    files[e.path().filename().string()] = workspace::read_file(e.path());
  }
  return files;
}

ServiceConfig temp_config(const fixture::TempDir& dir) {
  ServiceConfig c;
  c.workspace = (dir.path() / "ws").string();
  return c;
}

const json kFull = {{"severity", "mild diarrhea"},
                    {"duration", "1–3 weeks"},
                    {"clinical pattern", "variable signs & lambs limping"}};

}  // namespace

TEST(Config, DefaultsAndShippedFile) {
  const auto d = ServiceConfig::from_json(json::object());
  EXPECT_DOUBLE_EQ(d.retrieval.alpha, 0.3);
  EXPECT_EQ(d.retrieval.top_k, 3u);
  EXPECT_DOUBLE_EQ(d.bm25.k1, 1.5);
  EXPECT_DOUBLE_EQ(d.bm25.b, 0.75);
  EXPECT_DOUBLE_EQ(d.trigger.confidence_threshold, 0.35);
  EXPECT_EQ(d.tree_mode, TreeMode::StateMachine);
  const auto f = ServiceConfig::load_file((fixture::source_dir() / "config" / "goatrag.json").string());
  EXPECT_DOUBLE_EQ(f.retrieval.alpha, 0.3);
  EXPECT_EQ(f.retrieval.top_k, 3u);
  const auto again = ServiceConfig::from_json(f.to_json());
  EXPECT_EQ(again.to_json().dump(), f.to_json().dump());
  const auto exp = f.experiment();
  EXPECT_TRUE(exp.toggles.local_retrieval && exp.toggles.table_textualization && exp.toggles.tree_textualization);
}

TEST(Config, RejectionsNameTheField) {
  auto field_of = [](const json& j) {
    try {
      ServiceConfig::from_json(j);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
      return e.detail();
    }
    return std::string("none");
  };
  EXPECT_EQ(field_of({{"retrieval", {{"alpha", 1.5}}}}), "retrieval.alpha");
  EXPECT_EQ(field_of({{"retrieval", {{"top_k", 0}}}}), "retrieval.top_k");
  EXPECT_EQ(field_of({{"retrieval", {{"alpha", "high"}}}}), "retrieval.alpha");
  EXPECT_EQ(field_of({{"retrieval", {{"fusion", "max"}}}}), "retrieval.fusion");
  EXPECT_EQ(field_of({{"retrieval", {{"alhpa", 0.3}}}}), "retrieval.alhpa");
  EXPECT_EQ(code_of([] { ServiceConfig::load_file("/nonexistent.json"); }), ErrorCode::IoError);
}

TEST(Status, Mapping) {
  EXPECT_EQ(http_status(ErrorCode::UnknownSession), 404);
  EXPECT_EQ(http_status(ErrorCode::SessionClosed), 409);
  EXPECT_EQ(http_status(ErrorCode::UnknownValue), 422);
  EXPECT_EQ(http_status(ErrorCode::EmptyQuery), 400);
  EXPECT_EQ(http_status(ErrorCode::IndexUnavailable), 503);
  EXPECT_EQ(http_status(ErrorCode::Timeout), 504);
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    auto cfg = temp_config(dir);
    svc = std::make_unique<Service>(cfg, Providers::from_config(cfg));
  }
  fixture::TempDir dir;
  std::unique_ptr<Service> svc;
};

TEST_F(ServiceTest, NoIndexYet) {
  EXPECT_EQ(svc->health()["status"], "degraded");
  EXPECT_EQ(code_of([&] { svc->ask({{"question", "How much hay?"}}); }), ErrorCode::IndexUnavailable);
}

TEST_F(ServiceTest, IngestThenAsk) {
  const auto r = svc->ingest(sample_files());
  EXPECT_EQ(r["articles"], 3);
  EXPECT_EQ(r["tables"], 1);
  EXPECT_EQ(r["trees"], 1);
  EXPECT_EQ(svc->health()["status"], "ok");
  EXPECT_EQ(svc->health()["index_version"], r["index_version"]);
  workspace::Workspace ws(svc->config().workspace);
  EXPECT_TRUE(ws.has(ws.index_path()));
  EXPECT_EQ(load_snapshot(svc->config().workspace)->version(), r["index_version"]);

  const auto a = svc->ask({{"question", "How much hay does a dry doe need?"}});
  EXPECT_EQ(a["route"], "rag");
  EXPECT_TRUE(a["session_id"].is_null());
  ASSERT_FALSE(a["hits"].empty());
  EXPECT_NE(a["hits"][0]["chunk_id"].get<std::string>().find("doe-rations"), std::string::npos) << a.dump();

  const auto filtered = svc->ask({{"question", "How much hay does a dry doe need?"}, {"domain", "rearing"}});
  for (const auto& h : filtered["hits"]) EXPECT_EQ(h["chunk_id"].get<std::string>().find("doe-rations"), std::string::npos);

  EXPECT_EQ(code_of([&] { svc->ask({{"question", "  "}}); }), ErrorCode::EmptyQuery);
  EXPECT_EQ(code_of([&] { svc->ask({{"question", "x"}, {"alpha", 2.0}}); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { svc->ask({{"q", "x"}}); }), ErrorCode::FormatError);
}

TEST_F(ServiceTest, ClarificationSession) {
  svc->ingest(sample_files());
  const auto first = svc->ask({{"question", "My lamb has diarrhea"}});
  EXPECT_EQ(first["route"], "tree");
  EXPECT_EQ(first["session_state"], "open");
  ASSERT_EQ(first["clarification"]["questions"].size(), 3u);
  const std::string id = first["session_id"];

  auto next = svc->submit_evidence(id, {{"assignments", {{"severity", "mild diarrhea"}}}});
  EXPECT_EQ(next["clarification"]["questions"].size(), 2u);
  EXPECT_EQ(code_of([&] { svc->submit_evidence(id, {{"assignments", {{"severity", "severe diarrhea"}}}}); }),
            ErrorCode::ContradictoryEvidence);
  EXPECT_EQ(code_of([&] { svc->submit_evidence(id, {{"assignments", {{"duration", "forever"}}}}); }),
            ErrorCode::UnknownValue);
  // Free text on the session extracts the duration.
  next = svc->ask({{"question", "it has lasted 1-3 weeks"}, {"session_id", id}});
  EXPECT_EQ(next["evidence"]["duration"], "1–3 weeks");
  next = svc->submit_evidence(id, {{"assignments", kFull}});
  EXPECT_EQ(next["session_state"], "diagnosed");
  EXPECT_EQ(next["diagnosis"]["text"], "Rota/coronavirus/Giardia.");
  EXPECT_EQ(code_of([&] { svc->submit_evidence(id, {{"assignments", kFull}}); }), ErrorCode::SessionClosed);

  const auto s = svc->session(id);
  EXPECT_EQ(s["state"], "diagnosed");
  EXPECT_EQ(s["transcript"].size(), 8u);
  EXPECT_EQ(code_of([&] { svc->session("sess-404"); }), ErrorCode::UnknownSession);
}

TEST_F(ServiceTest, ConcurrentSessionsIsolated) {
  svc->ingest(sample_files());
  std::vector<std::string> ids;
  for (int i = 0; i < 8; ++i) ids.push_back(svc->ask({{"question", "My lamb has diarrhea"}})["session_id"]);
  std::vector<std::thread> workers;
  std::vector<json> results(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    workers.emplace_back([&, i] {
      const json ev = i % 2 ? json{{"severity", "severe diarrhea"}} : kFull;
      results[i] = svc->submit_evidence(ids[i], {{"assignments", ev}});
    });
  }
  for (auto& w : workers) w.join();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_EQ(results[i]["session_state"], "diagnosed");
    EXPECT_EQ(svc->session(ids[i])["evidence"].size(), i % 2 ? 1u : 3u);
  }
}

TEST(Http, EndToEnd) {
  fixture::TempDir dir;
  auto cfg = temp_config(dir);
  Service svc(cfg, Providers::from_config(cfg));
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread t([&] { server.run(); });
  httplib::Client cli("127.0.0.1", port);

  auto health = cli.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body)["status"], "degraded");

  auto ask_none = cli.Post("/ask", R"({"question": "hay?"})", "application/json");
  ASSERT_TRUE(ask_none);
  EXPECT_EQ(ask_none->status, 503);
  EXPECT_EQ(json::parse(ask_none->body)["code"], "IndexUnavailable");

  httplib::MultipartFormDataItems items;
  for (const auto& [name, content] : sample_files()) items.push_back({"files", content, name, "text/plain"});
  auto ingest = cli.Post("/ingest", items);
  ASSERT_TRUE(ingest);
  EXPECT_EQ(ingest->status, 200) << ingest->body;
  auto not_multipart = cli.Post("/ingest", "{}", "application/json");
  EXPECT_EQ(not_multipart->status, 400);

  auto bad = cli.Post("/ask", "{not json", "application/json");
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body)["code"], "FormatError");

  auto ask = cli.Post("/ask", R"({"question": "My lamb has diarrhea"})", "application/json");
  ASSERT_EQ(ask->status, 200);
  const auto body = json::parse(ask->body);
  const std::string id = body["session_id"];
  auto ev = cli.Post("/sessions/" + id + "/evidence", json{{"assignments", kFull}}.dump(), "application/json");
  ASSERT_EQ(ev->status, 200) << ev->body;
  EXPECT_EQ(json::parse(ev->body)["diagnosis"]["text"], "Rota/coronavirus/Giardia.");
  auto closed = cli.Post("/sessions/" + id + "/evidence", json{{"assignments", kFull}}.dump(), "application/json");
  EXPECT_EQ(closed->status, 409);
  auto sess = cli.Get("/sessions/" + id);
  EXPECT_EQ(sess->status, 200);
  EXPECT_EQ(json::parse(sess->body)["state"], "diagnosed");
  EXPECT_EQ(cli.Get("/sessions/nope")->status, 404);
  auto unknown = cli.Post("/sessions/" + id + "/evidence", R"({"assignments": {"colour": "red"}})", "application/json");
  EXPECT_EQ(unknown->status, 409);  // closed takes precedence

  server.stop();
  t.join();
  EXPECT_FALSE(server.running());
}
