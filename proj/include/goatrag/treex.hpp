#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "goatrag/corpus.hpp"
#include "goatrag/domain.hpp"

namespace goatrag::treex {

struct Condition {
  std::string attribute;
  std::string prompt;
};

struct Outcome {
  std::string diagnosis;
};

struct Node {
  std::string id;
  std::variant<Condition, Outcome> kind;

  bool is_leaf() const noexcept { return std::holds_alternative<Outcome>(kind); }
  const Condition* condition() const noexcept { return std::get_if<Condition>(&kind); }
  const Outcome* outcome() const noexcept { return std::get_if<Outcome>(&kind); }
};

struct Edge {
  std::string from;
  std::string label;
  std::string to;
};

struct PathStep {
  std::string node_id;
  std::string attribute;
  std::string label;
};

struct DiagnosticPath {
  std::string tree_id;
  std::size_t index = 0;  // 1-based k
  std::vector<PathStep> steps;  // internal nodes, root first
  std::string leaf_id;
  std::string diagnosis;

  std::size_t depth() const noexcept { return steps.size(); }
};

class DecisionTree;

/// Parses a tree document (JSON or YAML) of the form
/// {id, domain, root, symptoms?, presentation?,
///  nodes: [{id, attribute, prompt} | {id, diagnosis}],
///  edges: [{from, label, to}]}.
/// Errors name the source and line of the offending element.
DecisionTree load_tree(std::string_view content, std::string_view source_name = "tree");

class DecisionTree {
 public:
  struct Branch {
    std::string label;
    std::size_t child = 0;
  };

  /// Validates every structural rule and throws MalformedTree naming the
  /// violated rule: unique node ids, edges between known nodes, a single
  /// parent per node, the declared root has no parent, every node reachable
  /// from the root, internal nodes have >= 2 branches with distinct labels,
  /// leaves have none, and no attribute repeats along a root-to-leaf path.
  static DecisionTree build(std::string id, Domain domain, std::vector<Node> nodes,
                            std::vector<Edge> edges, std::string root,
                            std::vector<std::string> symptoms = {},
                            std::string presentation = {});

  const std::string& id() const noexcept { return id_; }
  Domain domain() const noexcept { return domain_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Node& root() const { return nodes_[root_]; }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  // Branches sorted by label.
  const std::vector<Branch>& branches(std::size_t node) const { return children_[node]; }
  std::size_t root_index() const noexcept { return root_; }

  // Symptom keywords used to route free-text questions to this tree.
  const std::vector<std::string>& symptoms() const noexcept { return symptoms_; }
  // Lead sentence for generated questions ("My lamb has diarrhea").
  const std::string& presentation() const noexcept { return presentation_; }

  // attribute -> admissible branch labels (sorted, deduplicated).
  const std::map<std::string, std::vector<std::string>>& vocabulary() const noexcept {
    return vocabulary_;
  }

  // Paths in depth-first order with branch labels sorted; computed at build.
  const std::vector<DiagnosticPath>& paths() const noexcept { return paths_; }

  struct SourceLines;  // line numbers for loader diagnostics

 private:
  friend DecisionTree load_tree(std::string_view, std::string_view);
  static DecisionTree build_impl(std::string id, Domain domain, std::vector<Node> nodes,
                                 std::vector<Edge> edges, std::string root,
                                 std::vector<std::string> symptoms, std::string presentation,
                                 const SourceLines* lines);

  std::string id_;
  Domain domain_ = Domain::DiseasePrevention;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::size_t root_ = 0;
  std::vector<std::vector<Branch>> children_;
  std::vector<std::string> symptoms_;
  std::string presentation_;
  std::map<std::string, std::vector<std::string>> vocabulary_;
  std::vector<DiagnosticPath> paths_;
};

nlohmann::json tree_to_json(const DecisionTree& tree);

/// Same as tree.paths(); kept as a free function for symmetry with the other
/// stages.
std::vector<DiagnosticPath> enumerate_paths(const DecisionTree& tree);

/// "If <a1> is <l1> and ... then the likely diagnosis is <leaf>." A path with
/// no conditions renders as "The likely diagnosis is <leaf>."
std::string textualize_path(const DiagnosticPath& path);

/// One paragraph per path, blank-line separated.
std::string textualize_tree(const DecisionTree& tree);

// attribute -> chosen branch label
using Evidence = std::map<std::string, std::string>;

struct Question {
  std::string attribute;
  std::string prompt;
  std::vector<std::string> allowed_labels;
};

struct Clarification {
  std::vector<Question> questions;
};

struct Diagnosis {
  std::string diagnosis;
  std::string explanation;  // textualize_path of the resolved path
  DiagnosticPath path;
};

using Resolution = std::variant<Diagnosis, Clarification>;

/// A path is consistent with the evidence when no evidence attribute on the
/// path carries a different label. Returns the diagnosis of the consistent
/// path whose internal attributes are all assigned; otherwise asks for every
/// unassigned attribute on the consistent paths, in path order.
/// Throws UnknownAttribute, UnknownValue, ContradictoryEvidence.
Resolution resolve(const DecisionTree& tree, const Evidence& evidence);

std::string render_clarification(const Clarification& c);
std::string render(const Resolution& r);

/// Question text for a partially known case, e.g.
/// "My lamb has diarrhea; severity is mild diarrhea. What is the likely diagnosis?"
std::string render_case_question(const DecisionTree& tree, const std::vector<PathStep>& known);

struct TreeQADataset {
  std::vector<corpus::QAPair> pairs;
  std::vector<std::size_t> per_path_counts;                 // n_k
  std::vector<std::pair<std::size_t, std::size_t>> indices;  // (k, i) per pair, 1-based
};

/// For every path with d conditions, one pair per subset of its conditions
/// (2^d), ordered by number of missing conditions then lexicographically.
/// Throws PathTooDeep when a path has more than `cap` conditions.
TreeQADataset generate_tree_qa(const DecisionTree& tree, std::size_t cap = 6);

/// Labels found in free text: for each attribute, the longest label whose
/// tokens occur contiguously in the text. Ambiguous attributes are skipped.
Evidence extract_evidence(const DecisionTree& tree, std::string_view text);

/// Number of symptom keywords plus extracted attribute values present in text.
std::size_t routing_overlap(const DecisionTree& tree, std::string_view text);

void to_json(nlohmann::json& j, const Clarification& c);
void to_json(nlohmann::json& j, const DiagnosticPath& p);

}  // namespace goatrag::treex
