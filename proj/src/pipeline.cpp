#include "goatrag/pipeline.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"

namespace goatrag::pipeline {

using nlohmann::json;

const treex::DecisionTree* route(const std::vector<const treex::DecisionTree*>& trees,
                                 std::string_view question, std::size_t min_overlap) {
  const treex::DecisionTree* best = nullptr;
  std::size_t best_overlap = 0;
  for (const auto* t : trees) {
    const std::size_t o = treex::routing_overlap(*t, question);
    if (o < min_overlap || o == 0) continue;
    if (!best || o > best_overlap || (o == best_overlap && t->id() < best->id())) {
      best = t;
      best_overlap = o;
    }
  }
  return best;
}

Result answer_from_tree(const treex::DecisionTree& tree, const treex::Evidence& evidence) {
  Result r;
  r.route = "tree";
  r.tree_id = tree.id();
  r.evidence = evidence;
  auto resolution = treex::resolve(tree, evidence);
  r.answer = treex::render(resolution);
  r.citations = {tree.id()};
  if (auto* d = std::get_if<treex::Diagnosis>(&resolution)) {
    r.diagnosis = std::move(*d);
  } else {
    r.clarification = std::get<treex::Clarification>(std::move(resolution));
  }
  return r;
}

Result run(const Resources& res, std::string_view question, const ExperimentConfig& config,
           const retrieval::Filter& filter) {
  if (!res.backend) throw Error(ErrorCode::MissingComponent, "no generation backend configured", "backend");
  const Toggles& on = config.toggles;

  if (on.tree_textualization && config.tree_mode == TreeMode::StateMachine) {
    if (const auto* tree = route(res.trees, question, config.routing_min_overlap)) {
      return answer_from_tree(*tree, treex::extract_evidence(*tree, question));
    }
  }

  Result r;
  std::vector<websearch::ContextBlock> local;
  std::vector<double> scores;
  std::vector<std::string> headings;
  if (on.local_retrieval) {
    if (!res.index) throw Error(ErrorCode::IndexUnavailable, "no index loaded");
    if (!res.embedder) throw Error(ErrorCode::MissingComponent, "no embedding provider configured", "embedder");
    for (const auto& h : res.index->search(question, *res.embedder, config.retrieval, filter)) {
      if (h.score <= 0.0) continue;
      const auto& c = res.index->chunks()[h.chunk];
      local.push_back({c.text, c.id, false, h.score});
      scores.push_back(h.score);
      if (c.heading) headings.push_back(*c.heading);
      r.hits.push_back({h.chunk_id, c.id, h.bm25, h.cosine, h.score, h.rank});
    }
  }

  std::vector<websearch::WebResult> web;
  if (on.web_search) {
    const auto decision = websearch::should_trigger(question, scores, config.trigger);
    if (decision.fire) {
      r.trigger = std::string(websearch::to_string(decision.reason));
      if (!res.search) throw Error(ErrorCode::MissingComponent, "no search provider configured", "search");
      static const websearch::Allowlist empty;
      try {
        web = websearch::web_search(*res.search, question, headings,
                                    res.allowlist ? *res.allowlist : empty, config.web_results);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ProviderUnavailable && e.code() != ErrorCode::QuotaExceeded) throw;
        r.degraded = std::string(to_string(e.code()));
      }
    }
  }

  auto merged = websearch::merge_context(std::move(local), web);
  const auto prompt = generate::fit_prompt(res.prompt_template, question, std::move(merged), res.prompt_budget);
  const auto answer = generate::generate_answer(*res.backend, prompt);
  r.answer = answer.text;
  r.citations = answer.citations;
  // Hits whose blocks were dropped to fit the budget are not reported as used.
  std::erase_if(r.hits, [&](const UsedHit& h) {
    return std::find(r.citations.begin(), r.citations.end(), h.provenance) == r.citations.end();
  });
  r.used_web = std::any_of(prompt.blocks.begin(), prompt.blocks.end(), [](const auto& b) { return b.from_web; });
  return r;
}

json Result::to_json() const {
  json hits_json = json::array();
  for (const auto& h : hits) {
    hits_json.push_back({{"chunk_id", h.chunk_id}, {"rank", h.rank}, {"score", h.score},
                         {"bm25", h.bm25}, {"cosine", h.cosine}});
  }
  json j = {{"route", route},       {"answer", answer},     {"citations", citations},
            {"hits", hits_json},    {"used_web", used_web}, {"web_trigger", trigger}};
  if (!degraded.empty()) j["degraded"] = degraded;
  if (route == "tree") {
    j["tree_id"] = tree_id;
    j["evidence"] = evidence;
  }
  if (clarification) {
    j["clarification"] = *clarification;
  } else {
    j["clarification"] = nullptr;
  }
  if (diagnosis) {
    j["diagnosis"] = {{"text", diagnosis->diagnosis}, {"explanation", diagnosis->explanation},
                      {"path", diagnosis->path}};
  }
  return j;
}

}  // namespace goatrag::pipeline
