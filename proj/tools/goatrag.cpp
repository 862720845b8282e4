// goatrag command-line interface.
//
// Exit codes: 0 success, 1 usage or configuration, 2 invalid input data,
// 3 empty corpus, 4 backend or provider failure, 5 I/O or missing index.

#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"
#include "goatrag/eval.hpp"
#include "goatrag/generate.hpp"
#include "goatrag/retrieval.hpp"
#include "goatrag/service.hpp"
#include "goatrag/tablex.hpp"
#include "goatrag/text.hpp"
#include "goatrag/workspace.hpp"

namespace {

using namespace goatrag;
using nlohmann::json;

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidConfig: return 1;
    case ErrorCode::EmptyCorpus: return 3;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::ParserUnavailable:
    case ErrorCode::QuotaExceeded:
    case ErrorCode::Timeout:
    case ErrorCode::MissingComponent: return 4;
    case ErrorCode::IoError:
    case ErrorCode::IndexUnavailable: return 5;
    default: return 2;
  }
}

struct Options {
  std::string workspace;  // empty: the config value
  std::string config_path;
  std::string backend;
  std::string embedder;
  double alpha = -1.0;
  int top_k = -1;
};

service::ServiceConfig load_config(const Options& o) {
  service::ServiceConfig c = o.config_path.empty() ? service::ServiceConfig{}
                                                   : service::ServiceConfig::load_file(o.config_path);
  if (!o.workspace.empty()) c.workspace = o.workspace;
  if (!o.backend.empty()) c.llm_backend = o.backend;
  if (!o.embedder.empty()) c.embedder = o.embedder;
  if (o.alpha >= 0.0) c.retrieval.alpha = o.alpha;
  if (o.top_k >= 0) c.retrieval.top_k = static_cast<std::size_t>(o.top_k);
  c.validate();
  return c;
}

int cmd_ingest(const Options& o, const std::string& dir) {
  const auto cfg = load_config(o);
  const auto sources = workspace::load_source_dir(dir);
  workspace::Workspace ws(cfg.workspace);
  ws.save_sources(sources);
  std::cout << "ingested " << sources.articles.size() << " articles, " << sources.tables.size()
            << " tables, " << sources.trees.size() << " trees into " << ws.root().string() << "\n";
  return 0;
}

int cmd_textualize(const Options& o, const std::string& parser_name) {
  const auto cfg = load_config(o);
  workspace::Workspace ws(cfg.workspace);
  const auto sources = ws.load_sources();
  std::unique_ptr<tablex::SemanticParser> parser;
  service::Providers providers;
  if (parser_name == "llm") {
    providers = service::Providers::from_config(cfg);
    parser = std::make_unique<tablex::LlmParser>(*providers.backend);
  } else {
    parser = std::make_unique<tablex::TemplateParser>();
  }
  const auto k = workspace::textualize(sources, *parser);
  ws.save_knowledge(k);
  std::size_t failed = 0;
  for (const auto& r : k.reports) {
    if (r.pass) continue;
    ++failed;
    std::cerr << "warning: table " << r.source << " narrative misses " << r.missing.size() << " cells\n";
  }
  std::cout << "textualized " << sources.tables.size() << " tables (" << failed << " failing preservation), "
            << sources.trees.size() << " trees (" << k.tree_qa.size() << " Q&A pairs); "
            << k.documents.size() << " documents\n";
  return 0;
}

int cmd_index(const Options& o) {
  const auto cfg = load_config(o);
  workspace::Workspace ws(cfg.workspace);
  const auto docs = ws.load_documents();
  const auto providers = service::Providers::from_config(cfg);
  const auto index = retrieval::Index::build(retrieval::chunks_of(docs), *providers.embedder, cfg.bm25);
  index.save_file(ws.index_path().string());
  std::cout << "indexed " << index.size() << " chunks from " << docs.size() << " documents (version "
            << index.version() << ")\n";
  return 0;
}

void print_answer(const json& resp) {
  std::cout << resp["answer"].get<std::string>() << "\n";
  const auto& cites = resp["citations"];
  if (!cites.empty()) {
    std::cout << "sources:";
    for (const auto& c : cites) std::cout << " [" << c.get<std::string>() << "]";
    std::cout << "\n";
  }
  if (resp.value("used_web", false)) std::cout << "(web search used)\n";
  if (resp.contains("degraded")) std::cout << "(web search unavailable: " << resp["degraded"].get<std::string>() << ")\n";
}

int cmd_ask(const Options& o, const std::string& question, const std::string& domain,
            const std::string& experiment, bool as_json) {
  const auto cfg = load_config(o);
  service::Service svc(cfg, service::Providers::from_config(cfg));
  svc.install(service::load_snapshot(cfg.workspace));
  json req = {{"question", question}};
  if (!domain.empty()) req["domain"] = domain;
  if (!experiment.empty()) req["experiment"] = experiment;
  json resp = svc.ask(req);

  while (!resp["clarification"].is_null() && resp.value("session_state", "") == "open") {
    const auto& q = resp["clarification"]["questions"][0];
    const auto attribute = q["attribute"].get<std::string>();
    const auto prompt = q["prompt"].get<std::string>();
    const auto labels = q["allowed"].get<std::vector<std::string>>();
    std::cout << (prompt.empty() ? "Please tell me the " + attribute : prompt) << "\n";
    for (std::size_t i = 0; i < labels.size(); ++i) std::cout << "  " << i + 1 << ". " << labels[i] << "\n";
    std::cout << "> " << std::flush;
    std::string line;
    std::string chosen;
    while (chosen.empty()) {
      if (!std::getline(std::cin, line)) {
        std::cerr << "error: input ended before the diagnosis was reached\n";
        return 2;
      }
      const std::string t(text::trim(line));
      char* end = nullptr;
      const long n = std::strtol(t.c_str(), &end, 10);
      if (!t.empty() && *end == '\0' && n >= 1 && static_cast<std::size_t>(n) <= labels.size()) {
        chosen = labels[static_cast<std::size_t>(n - 1)];
      } else {
        for (const auto& l : labels) {
          if (text::to_lower_ascii(l) == text::to_lower_ascii(t)) chosen = l;
        }
      }
      if (chosen.empty()) std::cout << "choose 1-" << labels.size() << "\n> " << std::flush;
    }
    resp = svc.submit_evidence(resp["session_id"].get<std::string>(), {{"assignments", {{attribute, chosen}}}});
  }
  if (as_json) {
    std::cout << resp.dump(2) << "\n";
  } else {
    print_answer(resp);
  }
  return 0;
}

std::vector<corpus::QAPair> validation_pairs(const workspace::Workspace& ws,
                                             const std::vector<corpus::Document>& docs,
                                             const std::vector<treex::DecisionTree>& trees,
                                             const llm::Backend& backend) {
  const auto path = ws.qa_dir() / "validation.jsonl";
  if (ws.has(path)) return corpus::read_qa_records(workspace::read_file(path));
  std::vector<corpus::QAPair> pairs;
  for (const auto& d : docs) {
    if (d.kind == SourceKind::Tree) continue;
    const QAKind kind = d.kind == SourceKind::Table ? QAKind::Table : QAKind::Text;
    for (const auto& chunk : corpus::chunk_document(d)) {
      try {
        auto qa = generate::generate_text_qa(backend, chunk, d.domain, kind);
        pairs.insert(pairs.end(), qa.begin(), qa.end());
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyChunk) throw;
      }
    }
  }
  for (const auto& t : trees) {
    auto qa = treex::generate_tree_qa(t);
    pairs.insert(pairs.end(), qa.pairs.begin(), qa.pairs.end());
  }
  workspace::write_file(path, corpus::write_qa_records(pairs));
  return pairs;
}

int cmd_eval(const Options& o, const std::string& experiment, int repetitions, int threads,
             const std::string& labels) {
  const auto cfg = load_config(o);
  workspace::Workspace ws(cfg.workspace);
  const auto providers = service::Providers::from_config(cfg);
  eval::EvalDataset data;
  data.documents = ws.load_documents();
  data.trees = ws.load_sources().trees;
  data.pairs = validation_pairs(ws, data.documents, data.trees, *providers.backend);
  if (ws.has(ws.qa_dir() / "test.jsonl")) {
    auto test = corpus::read_qa_records(workspace::read_file(ws.qa_dir() / "test.jsonl"));
    data.pairs.insert(data.pairs.end(), test.begin(), test.end());
  }
  eval::Components comps;
  comps.embedder = providers.embedder.get();
  comps.token_embedder = providers.embedder.get();
  comps.backend = providers.backend.get();
  comps.search = providers.search.get();
  comps.allowlist = &providers.allowlist;
  comps.prompt_template = providers.prompt_template;
  comps.prompt_budget = cfg.prompt_budget;
  comps.threads = threads;

  std::vector<std::string> ids;
  if (text::to_lower_ascii(experiment) == "all") {
    ids = ExperimentConfig::preset_ids();
  } else {
    ids = {experiment};
  }
  std::vector<eval::EvalReport> reports;
  for (const auto& id : ids) {
    ExperimentConfig ec = ExperimentConfig::preset(id);
    ec.retrieval = cfg.retrieval;
    ec.bm25 = cfg.bm25;
    ec.trigger.confidence_threshold = cfg.trigger.confidence_threshold;
    ec.trigger.keywords = cfg.trigger.keywords;
    ec.tree_mode = cfg.tree_mode;
    ec.routing_min_overlap = cfg.routing_min_overlap;
    ec.web_results = cfg.web_results;
    if (repetitions > 0) ec.repetitions = static_cast<std::size_t>(repetitions);
    std::cout << "experiment " << ec.id << " " << json(ec).dump() << "\n";
    auto report = eval::run_experiment(ec, data, comps);
    if (!labels.empty()) eval::apply_error_labels(report, workspace::read_file(labels));
    workspace::write_file(ws.reports_dir() / (ec.id + ".json"), json(report).dump(2) + "\n");
    workspace::write_file(ws.reports_dir() / (ec.id + ".records.jsonl"), eval::write_records(report));
    reports.push_back(std::move(report));
  }
  std::cout << "\n" << eval::render_accuracy_table(reports) << "\n" << eval::render_kind_table(reports);
  if (!labels.empty()) std::cout << "\n" << eval::render_error_table(reports.back());
  return 0;
}

service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const Options& o, const std::string& host, int port) {
  auto cfg = load_config(o);
  if (!host.empty()) cfg.host = host;
  if (port >= 0) cfg.port = port;
  service::Service svc(cfg, service::Providers::from_config(cfg));
  svc.install(service::load_snapshot(cfg.workspace));
  service::HttpServer server(svc);
  const int bound = server.bind(cfg.host, cfg.port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on http://" << cfg.host << ":" << bound << "\n" << std::flush;
  server.run();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"goatrag: retrieval-augmented knowledge assistant for goat farming"};
  app.require_subcommand(1);
  Options o;
  app.add_option("-w,--workspace", o.workspace, "Workspace directory (default .goatrag)");
  app.add_option("-c,--config", o.config_path, "Service configuration file (JSON)");
  app.add_option("--backend", o.backend, "Generation backend")->check(CLI::IsMember({"mock", "http"}));
  app.add_option("--embedder", o.embedder, "Embedding provider")->check(CLI::IsMember({"hash", "http"}));
  app.add_option("--alpha", o.alpha, "Lexical weight of the hybrid score")->check(CLI::Range(0.0, 1.0));
  app.add_option("--top-k", o.top_k, "Chunks retrieved per question")->check(CLI::PositiveNumber);

  std::string dir;
  auto* ingest = app.add_subcommand("ingest", "Read articles, tables and trees from a directory");
  ingest->add_option("dir", dir, "Source directory")->required();

  std::string parser = "template";
  auto* textualize = app.add_subcommand("textualize", "Convert tables and trees to text");
  textualize->add_option("--parser", parser, "Table row parser")->check(CLI::IsMember({"template", "llm"}));

  auto* index = app.add_subcommand("index", "Build and persist the retrieval index");

  std::string question, domain, ask_experiment;
  bool as_json = false;
  auto* ask = app.add_subcommand("ask", "Answer one question");
  ask->add_option("question", question, "Question text")->required();
  ask->add_option("--domain", domain, "Restrict retrieval to one domain");
  ask->add_option("--experiment", ask_experiment, "Use an experiment preset's toggles");
  ask->add_flag("--json", as_json, "Print the full response as JSON");

  std::string experiment, labels;
  int repetitions = 0, threads = 1;
  auto* ev = app.add_subcommand("eval", "Run an ablation experiment");
  ev->add_option("--experiment", experiment, "Exp1..Exp6 or all")->required();
  ev->add_option("--repetitions", repetitions, "Repetitions per pair");
  ev->add_option("--threads", threads, "Pairs evaluated concurrently");
  ev->add_option("--labels", labels, "Error labels (JSONL of {pair_id, category})");

  std::string host;
  int port = -1;
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*ingest) return cmd_ingest(o, dir);
    if (*textualize) return cmd_textualize(o, parser);
    if (*index) return cmd_index(o);
    if (*ask) return cmd_ask(o, question, domain, ask_experiment, as_json);
    if (*ev) return cmd_eval(o, experiment, repetitions, threads, labels);
    if (*serve) return cmd_serve(o, host, port);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  }
  return 1;
}
