#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "goatrag/retrieval.hpp"
#include "goatrag/websearch.hpp"

namespace goatrag {

struct Toggles {
  bool local_retrieval = false;
  bool table_textualization = false;
  bool tree_textualization = false;
  bool web_search = false;
  friend bool operator==(const Toggles&, const Toggles&) = default;
};

// Indexed: tree knowledge enters only as textualized documents in the index.
// StateMachine: additionally, questions that match a tree's symptoms are
// answered by the clarification protocol instead of retrieval.
enum class TreeMode { Indexed, StateMachine };

std::string_view to_string(TreeMode m) noexcept;
TreeMode tree_mode_from_string(std::string_view s);

struct ExperimentConfig {
  std::string id = "custom";
  Toggles toggles;
  retrieval::HybridConfig retrieval;
  retrieval::Bm25Params bm25;
  websearch::TriggerConfig trigger;
  TreeMode tree_mode = TreeMode::StateMachine;
  std::size_t routing_min_overlap = 1;
  std::size_t web_results = 5;
  std::size_t repetitions = 3;
  double threshold = 0.85;

  /// Exp1 nothing; Exp2 retrieval; Exp3 + tables; Exp4 retrieval + trees;
  /// Exp5 + tables + trees; Exp6 everything. Throws InvalidConfig otherwise.
  static ExperimentConfig preset(std::string_view id);
  static std::vector<std::string> preset_ids();

  // Throws InvalidConfig naming the offending field.
  void validate() const;
};

void to_json(nlohmann::json& j, const Toggles& t);
void to_json(nlohmann::json& j, const ExperimentConfig& c);

}  // namespace goatrag
