#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "goatrag/embedding.hpp"
#include "goatrag/experiment.hpp"
#include "goatrag/generate.hpp"
#include "goatrag/llm.hpp"
#include "goatrag/retrieval.hpp"
#include "goatrag/treex.hpp"
#include "goatrag/websearch.hpp"

namespace goatrag::pipeline {

/// Borrowed handles. Only the components the configuration enables need to
/// be present.
struct Resources {
  const retrieval::Index* index = nullptr;
  const embed::EmbeddingProvider* embedder = nullptr;
  const llm::Backend* backend = nullptr;
  const websearch::SearchProvider* search = nullptr;
  const websearch::Allowlist* allowlist = nullptr;
  std::vector<const treex::DecisionTree*> trees;
  generate::PromptTemplate prompt_template = generate::PromptTemplate::builtin();
  std::size_t prompt_budget = 16000;
};

struct UsedHit {
  std::string chunk_id;
  std::string provenance;
  double bm25 = 0.0;
  double cosine = 0.0;
  double score = 0.0;
  std::size_t rank = 0;
};

struct Result {
  std::string route = "rag";  // "rag" or "tree"
  std::string answer;
  std::vector<std::string> citations;
  std::vector<UsedHit> hits;
  std::optional<treex::Clarification> clarification;
  std::optional<treex::Diagnosis> diagnosis;
  std::string tree_id;
  treex::Evidence evidence;
  bool used_web = false;
  std::string trigger = "none";
  std::string degraded;  // error code of a failed web lookup

  // AskResponse body (without session fields).
  nlohmann::json to_json() const;
};

/// Best tree for a question: highest routing overlap, at least `min_overlap`,
/// ties to the smaller tree id.
const treex::DecisionTree* route(const std::vector<const treex::DecisionTree*>& trees,
                                 std::string_view question, std::size_t min_overlap);

/// Clarification-protocol answer for accumulated evidence.
Result answer_from_tree(const treex::DecisionTree& tree, const treex::Evidence& evidence);

/// Tree route (state-machine mode, tree toggle on, routed question) or
/// search -> should_trigger -> web_search -> merge_context -> build_prompt ->
/// generate_answer. Local hits with a fused score <= 0 are not used as context.
/// Web failures are reported through `degraded` instead of thrown. Throws
/// MissingComponent when an enabled component has no handle.
Result run(const Resources& res, std::string_view question, const ExperimentConfig& config,
           const retrieval::Filter& filter = {});

}  // namespace goatrag::pipeline
