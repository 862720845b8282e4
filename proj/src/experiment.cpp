#include "goatrag/experiment.hpp"

#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"
#include "goatrag/text.hpp"

namespace goatrag {

std::string_view to_string(TreeMode m) noexcept {
  return m == TreeMode::Indexed ? "indexed" : "state_machine";
}

TreeMode tree_mode_from_string(std::string_view s) {
  const std::string v = text::to_lower_ascii(text::trim(s));
  if (v == "indexed") return TreeMode::Indexed;
  if (v == "state_machine" || v == "state-machine") return TreeMode::StateMachine;
  throw Error(ErrorCode::InvalidConfig, "tree_mode must be 'indexed' or 'state_machine'", std::string(s));
}

std::vector<std::string> ExperimentConfig::preset_ids() {
  return {"Exp1", "Exp2", "Exp3", "Exp4", "Exp5", "Exp6"};
}

ExperimentConfig ExperimentConfig::preset(std::string_view id) {
  ExperimentConfig c;
  const std::string key = text::to_lower_ascii(text::trim(id));
  if (key == "exp1") c.toggles = {false, false, false, false};
  else if (key == "exp2") c.toggles = {true, false, false, false};
  else if (key == "exp3") c.toggles = {true, true, false, false};
  else if (key == "exp4") c.toggles = {true, false, true, false};
  else if (key == "exp5") c.toggles = {true, true, true, false};
  else if (key == "exp6") c.toggles = {true, true, true, true};
  else throw Error(ErrorCode::InvalidConfig, "unknown experiment '" + std::string(id) + "'", "experiment");
  c.id = "Exp" + key.substr(3);
  c.trigger.enabled = c.toggles.web_search;
  return c;
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& msg) {
    throw Error(ErrorCode::InvalidConfig, field + ": " + msg, field);
  };
  if (!(retrieval.alpha >= 0.0 && retrieval.alpha <= 1.0)) bad("retrieval.alpha", "must be in [0, 1]");
  if (retrieval.top_k == 0) bad("retrieval.top_k", "must be a positive integer");
  if (!(bm25.k1 > 0.0)) bad("bm25.k1", "must be positive");
  if (!(bm25.b >= 0.0 && bm25.b <= 1.0)) bad("bm25.b", "must be in [0, 1]");
  if (repetitions == 0) bad("repetitions", "must be a positive integer");
  if (web_results == 0) bad("web_results", "must be a positive integer");
  if (!(threshold >= 0.0 && threshold <= 1.0)) bad("threshold", "must be in [0, 1]");
  if (!(trigger.confidence_threshold >= 0.0 && trigger.confidence_threshold <= 1.0) &&
      retrieval.mode == retrieval::FusionMode::Normalized) {
    bad("trigger.confidence_threshold", "must be in [0, 1] with normalized fusion");
  }
  if (!toggles.local_retrieval && (toggles.table_textualization || toggles.tree_textualization)) {
    bad("toggles", "table or tree textualization requires local_retrieval");
  }
}

void to_json(nlohmann::json& j, const Toggles& t) {
  j = {{"local_retrieval", t.local_retrieval},
       {"table_textualization", t.table_textualization},
       {"tree_textualization", t.tree_textualization},
       {"web_search", t.web_search}};
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"id", c.id},
       {"toggles", c.toggles},
       {"alpha", c.retrieval.alpha},
       {"top_k", c.retrieval.top_k},
       {"k1", c.bm25.k1},
       {"b", c.bm25.b},
       {"fusion", c.retrieval.mode == retrieval::FusionMode::Raw ? "raw" : "normalized"},
       {"tree_mode", to_string(c.tree_mode)},
       {"confidence_threshold", c.trigger.confidence_threshold},
       {"repetitions", c.repetitions},
       {"threshold", c.threshold}};
}

}  // namespace goatrag
