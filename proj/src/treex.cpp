#include "goatrag/treex.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "goatrag/error.hpp"
#include "goatrag/text.hpp"

namespace goatrag::treex {

struct DecisionTree::SourceLines {
  std::string source;
  std::size_t document_line = 0;
  std::vector<std::size_t> node_lines;
  std::vector<std::size_t> edge_lines;
};

namespace {

using SourceLines = DecisionTree::SourceLines;

[[noreturn]] void malformed(const std::string& tree_id, const SourceLines* lines,
                            std::optional<std::size_t> line, std::string_view rule,
                            const std::string& message) {
  std::string where;
  if (lines) {
    where = lines->source + ":" + std::to_string(line.value_or(lines->document_line)) + ": ";
  } else {
    where = "tree '" + tree_id + "': ";
  }
  throw Error(ErrorCode::MalformedTree, where + "[" + std::string(rule) + "] " + message,
              std::string(rule));
}

std::optional<std::size_t> node_line(const SourceLines* lines, std::size_t i) {
  if (!lines || i >= lines->node_lines.size()) return std::nullopt;
  return lines->node_lines[i];
}

std::optional<std::size_t> edge_line(const SourceLines* lines, std::size_t i) {
  if (!lines || i >= lines->edge_lines.size()) return std::nullopt;
  return lines->edge_lines[i];
}

std::string strip_terminal_period(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

DecisionTree DecisionTree::build(std::string id, Domain domain, std::vector<Node> nodes,
                                 std::vector<Edge> edges, std::string root,
                                 std::vector<std::string> symptoms, std::string presentation) {
  return build_impl(std::move(id), domain, std::move(nodes), std::move(edges), std::move(root),
                    std::move(symptoms), std::move(presentation), nullptr);
}

DecisionTree DecisionTree::build_impl(std::string id, Domain domain, std::vector<Node> nodes,
                                      std::vector<Edge> edges, std::string root,
                                      std::vector<std::string> symptoms, std::string presentation,
                                      const SourceLines* lines) {
  DecisionTree t;
  t.id_ = std::move(id);
  t.domain_ = domain;

  if (t.id_.empty()) malformed(t.id_, lines, std::nullopt, "tree-id", "tree id is empty");
  if (nodes.empty()) malformed(t.id_, lines, std::nullopt, "nodes", "tree has no nodes");

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    if (text::is_blank(n.id)) malformed(t.id_, lines, node_line(lines, i), "node-id", "node id is empty");
    if (!index.emplace(n.id, i).second) {
      malformed(t.id_, lines, node_line(lines, i), "unique-node-id",
                "node id '" + n.id + "' is declared twice");
    }
    if (const auto* c = n.condition(); c && text::is_blank(c->attribute)) {
      malformed(t.id_, lines, node_line(lines, i), "attribute-name",
                "internal node '" + n.id + "' has an empty attribute");
    }
    if (const auto* o = n.outcome(); o && text::is_blank(o->diagnosis)) {
      malformed(t.id_, lines, node_line(lines, i), "leaf-diagnosis",
                "leaf '" + n.id + "' has an empty diagnosis");
    }
  }

  auto root_it = index.find(root);
  if (root_it == index.end()) {
    malformed(t.id_, lines, std::nullopt, "root", "root '" + root + "' is not a declared node");
  }
  t.root_ = root_it->second;

  t.children_.assign(nodes.size(), {});
  std::vector<std::optional<std::size_t>> parent(nodes.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    auto from = index.find(edge.from);
    auto to = index.find(edge.to);
    if (from == index.end() || to == index.end()) {
      malformed(t.id_, lines, edge_line(lines, e), "edge-endpoint",
                "edge " + edge.from + " -> " + edge.to + " references an undeclared node");
    }
    if (text::is_blank(edge.label)) {
      malformed(t.id_, lines, edge_line(lines, e), "branch-label",
                "edge " + edge.from + " -> " + edge.to + " has an empty label");
    }
    if (nodes[from->second].is_leaf()) {
      malformed(t.id_, lines, edge_line(lines, e), "leaf-has-branches",
                "leaf '" + edge.from + "' has an outgoing edge");
    }
    if (to->second == t.root_) {
      malformed(t.id_, lines, edge_line(lines, e), "root-has-parent",
                "root '" + edge.to + "' has an incoming edge");
    }
    if (parent[to->second]) {
      malformed(t.id_, lines, edge_line(lines, e), "single-parent",
                "node '" + edge.to + "' has more than one parent");
    }
    for (const auto& b : t.children_[from->second]) {
      if (b.label == edge.label) {
        malformed(t.id_, lines, edge_line(lines, e), "distinct-branch-labels",
                  "node '" + edge.from + "' has two branches labelled '" + edge.label + "'");
      }
    }
    parent[to->second] = from->second;
    t.children_[from->second].push_back({edge.label, to->second});
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!nodes[i].is_leaf() && t.children_[i].size() < 2) {
      malformed(t.id_, lines, node_line(lines, i), "internal-branching",
                "internal node '" + nodes[i].id + "' needs at least two branches, has " +
                    std::to_string(t.children_[i].size()));
    }
    std::sort(t.children_[i].begin(), t.children_[i].end(),
              [](const Branch& a, const Branch& b) { return a.label < b.label; });
  }

  // With one parent per node and a parentless root, anything on a cycle is
  // unreachable, so this check covers acyclicity too.
  std::vector<bool> seen(nodes.size(), false);
  std::vector<std::size_t> stack{t.root_};
  while (!stack.empty()) {
    const std::size_t n = stack.back();
    stack.pop_back();
    seen[n] = true;
    for (const auto& b : t.children_[n]) stack.push_back(b.child);
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!seen[i]) {
      malformed(t.id_, lines, node_line(lines, i), "reachable-acyclic",
                "node '" + nodes[i].id + "' is not reachable from the root (disconnected or cyclic)");
    }
  }

  t.nodes_ = std::move(nodes);
  t.edges_ = std::move(edges);
  t.symptoms_ = std::move(symptoms);
  t.presentation_ = std::move(presentation);

  std::vector<PathStep> steps;
  std::set<std::string> on_path;
  std::function<void(std::size_t)> walk = [&](std::size_t n) {
    const Node& node = t.nodes_[n];
    if (const auto* o = node.outcome()) {
      DiagnosticPath p;
      p.tree_id = t.id_;
      p.index = t.paths_.size() + 1;
      p.steps = steps;
      p.leaf_id = node.id;
      p.diagnosis = o->diagnosis;
      t.paths_.push_back(std::move(p));
      return;
    }
    const auto& attr = node.condition()->attribute;
    if (!on_path.insert(attr).second) {
      malformed(t.id_, lines, node_line(lines, n), "unique-attribute-per-path",
                "attribute '" + attr + "' repeats on the path to node '" + node.id + "'");
    }
    for (const auto& b : t.children_[n]) {
      steps.push_back({node.id, attr, b.label});
      walk(b.child);
      steps.pop_back();
    }
    on_path.erase(attr);
  };
  walk(t.root_);

  for (std::size_t n = 0; n < t.nodes_.size(); ++n) {
    const auto* c = t.nodes_[n].condition();
    if (!c) continue;
    auto& labels = t.vocabulary_[c->attribute];
    for (const auto& b : t.children_[n]) labels.push_back(b.label);
  }
  for (auto& [attr, labels] : t.vocabulary_) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  }
  return t;
}

namespace {

std::size_t mark_line(const YAML::Node& n) { return static_cast<std::size_t>(n.Mark().line) + 1; }

std::string required_string(const YAML::Node& map, const char* key, const std::string& source,
                            std::size_t line) {
  const YAML::Node v = map[key];
  if (!v || !v.IsScalar()) {
    throw Error(ErrorCode::MalformedTree,
                source + ":" + std::to_string(line) + ": missing string field '" + key + "'",
                "schema");
  }
  return v.as<std::string>();
}

std::string optional_string(const YAML::Node& map, const char* key) {
  const YAML::Node v = map[key];
  return v && v.IsScalar() ? v.as<std::string>() : std::string{};
}

}  // namespace

DecisionTree load_tree(std::string_view content, std::string_view source_name) {
  const std::string source(source_name);
  YAML::Node doc;
  try {
    doc = YAML::Load(std::string(content));
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::FormatError,
                source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!doc.IsMap()) {
    throw Error(ErrorCode::MalformedTree, source + ":1: tree document must be a mapping", "schema");
  }
  SourceLines lines;
  lines.source = source;
  lines.document_line = mark_line(doc);

  const std::string id = required_string(doc, "id", source, lines.document_line);
  const Domain domain = domain_from_string(required_string(doc, "domain", source, lines.document_line),
                                           source);
  const std::string root = required_string(doc, "root", source, lines.document_line);

  std::vector<std::string> symptoms;
  if (const YAML::Node s = doc["symptoms"]; s && s.IsSequence()) {
    for (const auto& item : s) symptoms.push_back(item.as<std::string>());
  }
  std::string presentation = optional_string(doc, "presentation");

  const YAML::Node node_list = doc["nodes"];
  if (!node_list || !node_list.IsSequence()) {
    throw Error(ErrorCode::MalformedTree,
                source + ":" + std::to_string(lines.document_line) + ": 'nodes' must be a list",
                "schema");
  }
  std::vector<Node> nodes;
  for (const auto& item : node_list) {
    const std::size_t line = mark_line(item);
    if (!item.IsMap()) {
      throw Error(ErrorCode::MalformedTree, source + ":" + std::to_string(line) +
                                                ": node entry must be a mapping", "schema");
    }
    Node n;
    n.id = required_string(item, "id", source, line);
    const bool has_attr = item["attribute"].IsDefined();
    const bool has_diag = item["diagnosis"].IsDefined();
    if (has_attr == has_diag) {
      throw Error(ErrorCode::MalformedTree,
                  source + ":" + std::to_string(line) + ": node '" + n.id +
                      "' must have exactly one of 'attribute' or 'diagnosis'",
                  "schema");
    }
    if (has_attr) {
      n.kind = Condition{required_string(item, "attribute", source, line),
                         optional_string(item, "prompt")};
    } else {
      n.kind = Outcome{required_string(item, "diagnosis", source, line)};
    }
    nodes.push_back(std::move(n));
    lines.node_lines.push_back(line);
  }

  std::vector<Edge> edges;
  if (const YAML::Node edge_list = doc["edges"]; edge_list) {
    if (!edge_list.IsSequence()) {
      throw Error(ErrorCode::MalformedTree,
                  source + ":" + std::to_string(mark_line(edge_list)) + ": 'edges' must be a list",
                  "schema");
    }
    for (const auto& item : edge_list) {
      const std::size_t line = mark_line(item);
      edges.push_back({required_string(item, "from", source, line),
                       required_string(item, "label", source, line),
                       required_string(item, "to", source, line)});
      lines.edge_lines.push_back(line);
    }
  }
  return DecisionTree::build_impl(id, domain, std::move(nodes), std::move(edges), root,
                                  std::move(symptoms), std::move(presentation), &lines);
}

nlohmann::json tree_to_json(const DecisionTree& tree) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    if (const auto* c = n.condition()) {
      nodes.push_back({{"id", n.id}, {"attribute", c->attribute}, {"prompt", c->prompt}});
    } else {
      nodes.push_back({{"id", n.id}, {"diagnosis", n.outcome()->diagnosis}});
    }
  }
  json edges = json::array();
  for (const auto& e : tree.edges()) edges.push_back({{"from", e.from}, {"label", e.label}, {"to", e.to}});
  return {{"id", tree.id()},
          {"domain", to_string(tree.domain())},
          {"root", tree.root().id},
          {"symptoms", tree.symptoms()},
          {"presentation", tree.presentation()},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)}};
}

std::vector<DiagnosticPath> enumerate_paths(const DecisionTree& tree) { return tree.paths(); }

std::string textualize_path(const DiagnosticPath& path) {
  const std::string diagnosis = strip_terminal_period(path.diagnosis);
  if (path.steps.empty()) return "The likely diagnosis is " + diagnosis + ".";
  std::string out = "If ";
  for (std::size_t i = 0; i < path.steps.size(); ++i) {
    if (i) out += " and ";
    out += path.steps[i].attribute + " is " + path.steps[i].label;
  }
  out += " then the likely diagnosis is " + diagnosis + ".";
  return out;
}

std::string textualize_tree(const DecisionTree& tree) {
  std::vector<std::string> parts;
  for (const auto& p : tree.paths()) parts.push_back(textualize_path(p));
  return text::join(parts, "\n\n");
}

Resolution resolve(const DecisionTree& tree, const Evidence& evidence) {
  const auto& vocab = tree.vocabulary();
  for (const auto& [attr, label] : evidence) {
    auto it = vocab.find(attr);
    if (it == vocab.end()) {
      throw Error(ErrorCode::UnknownAttribute,
                  "tree '" + tree.id() + "' has no attribute '" + attr + "'", attr);
    }
    if (!std::binary_search(it->second.begin(), it->second.end(), label)) {
      throw Error(ErrorCode::UnknownValue,
                  "'" + label + "' is not a branch of attribute '" + attr + "'", attr);
    }
  }

  std::vector<const DiagnosticPath*> consistent;
  for (const auto& p : tree.paths()) {
    const bool ok = std::all_of(p.steps.begin(), p.steps.end(), [&](const PathStep& s) {
      auto it = evidence.find(s.attribute);
      return it == evidence.end() || it->second == s.label;
    });
    if (ok) consistent.push_back(&p);
  }
  if (consistent.empty()) {
    throw Error(ErrorCode::ContradictoryEvidence,
                "no diagnostic path of tree '" + tree.id() + "' matches the evidence");
  }

  for (const auto* p : consistent) {
    const bool complete = std::all_of(p->steps.begin(), p->steps.end(), [&](const PathStep& s) {
      return evidence.count(s.attribute) > 0;
    });
    if (complete) return Diagnosis{p->diagnosis, textualize_path(*p), *p};
  }

  Clarification c;
  std::unordered_map<std::string, std::size_t> slot;
  std::unordered_map<std::string, std::string> prompts;
  for (const auto& n : tree.nodes()) {
    if (const auto* cond = n.condition(); cond && !prompts.count(cond->attribute)) {
      prompts[cond->attribute] = cond->prompt;
    }
  }
  for (const auto* p : consistent) {
    for (const auto& s : p->steps) {
      if (evidence.count(s.attribute)) continue;
      auto [it, inserted] = slot.emplace(s.attribute, c.questions.size());
      if (inserted) c.questions.push_back({s.attribute, prompts[s.attribute], {}});
      auto& labels = c.questions[it->second].allowed_labels;
      if (std::find(labels.begin(), labels.end(), s.label) == labels.end()) labels.push_back(s.label);
    }
  }
  return c;
}

std::string render_clarification(const Clarification& c) {
  if (c.questions.size() == 1) {
    const auto& q = c.questions.front();
    std::string lead = q.prompt.empty() ? "Please tell me the " + q.attribute
                                        : strip_terminal_period(q.prompt);
    std::string options;
    for (std::size_t i = 0; i < q.allowed_labels.size(); ++i) {
      if (i) options += " or ";
      options += q.allowed_labels[i];
    }
    return lead + " (" + options + ").";
  }
  std::string out = "To provide effective recommendations, please supply:";
  for (std::size_t i = 0; i < c.questions.size(); ++i) {
    const auto& q = c.questions[i];
    out += " " + std::to_string(i + 1) + ". " + q.attribute + " (";
    for (std::size_t k = 0; k < q.allowed_labels.size(); ++k) {
      if (k) out += "/";
      out += q.allowed_labels[k];
    }
    out += i + 1 < c.questions.size() ? ");" : ").";
  }
  return out;
}

std::string render(const Resolution& r) {
  if (const auto* d = std::get_if<Diagnosis>(&r)) return d->explanation;
  return render_clarification(std::get<Clarification>(r));
}

std::string render_case_question(const DecisionTree& tree, const std::vector<PathStep>& known) {
  std::string lead = strip_terminal_period(tree.presentation());
  if (lead.empty()) {
    lead = tree.symptoms().empty() ? "The animal is unwell"
                                   : "The animal shows " + text::join(tree.symptoms(), ", ");
  }
  std::string out = lead;
  if (!known.empty()) {
    out += "; ";
    for (std::size_t i = 0; i < known.size(); ++i) {
      if (i) out += " and ";
      out += known[i].attribute + " is " + known[i].label;
    }
  }
  return out + ". What is the likely diagnosis?";
}

TreeQADataset generate_tree_qa(const DecisionTree& tree, std::size_t cap) {
  TreeQADataset ds;
  for (const auto& path : tree.paths()) {
    const std::size_t d = path.depth();
    if (d > cap) {
      throw Error(ErrorCode::PathTooDeep, "path " + std::to_string(path.index) + " of tree '" +
                                              tree.id() + "' has " + std::to_string(d) +
                                              " conditions, cap is " + std::to_string(cap));
    }
    std::size_t i = 0;
    for (std::size_t missing = 0; missing <= d; ++missing) {
      // Lexicographic combinations of `missing` indices out of d.
      std::vector<bool> drop(d, false);
      std::fill(drop.begin(), drop.begin() + static_cast<std::ptrdiff_t>(missing), true);
      do {
        std::vector<PathStep> known;
        Evidence ev;
        for (std::size_t s = 0; s < d; ++s) {
          if (drop[s]) continue;
          known.push_back(path.steps[s]);
          ev[path.steps[s].attribute] = path.steps[s].label;
        }
        ++i;
        corpus::QAPair qa;
        qa.id = tree.id() + "/p" + std::to_string(path.index) + "/q" + std::to_string(i);
        qa.kind = QAKind::Tree;
        qa.domain = tree.domain();
        qa.question = render_case_question(tree, known);
        qa.answer = render(resolve(tree, ev));
        qa.source_refs = {tree.id()};
        ds.pairs.push_back(std::move(qa));
        ds.indices.emplace_back(path.index, i);
      } while (std::prev_permutation(drop.begin(), drop.end()));
    }
    ds.per_path_counts.push_back(i);
  }
  return ds;
}

namespace {

bool contains_tokens(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

Evidence extract_evidence(const DecisionTree& tree, std::string_view input) {
  const auto tokens = text::tokenize(input);
  Evidence ev;
  for (const auto& [attr, labels] : tree.vocabulary()) {
    std::size_t best_len = 0;
    const std::string* best = nullptr;
    bool tie = false;
    for (const auto& label : labels) {
      const auto lt = text::tokenize(label);
      if (!contains_tokens(tokens, lt)) continue;
      if (lt.size() > best_len) {
        best_len = lt.size();
        best = &label;
        tie = false;
      } else if (lt.size() == best_len) {
        tie = true;
      }
    }
    if (best && !tie) ev[attr] = *best;
  }
  return ev;
}

std::size_t routing_overlap(const DecisionTree& tree, std::string_view input) {
  const auto tokens = text::tokenize(input);
  std::size_t hits = 0;
  for (const auto& s : tree.symptoms()) {
    if (contains_tokens(tokens, text::tokenize(s))) ++hits;
  }
  return hits + extract_evidence(tree, input).size();
}

void to_json(nlohmann::json& j, const Clarification& c) {
  j = nlohmann::json::array();
  for (const auto& q : c.questions) {
    j.push_back({{"attribute", q.attribute}, {"prompt", q.prompt}, {"allowed", q.allowed_labels}});
  }
  j = {{"questions", j}, {"text", render_clarification(c)}};
}

void to_json(nlohmann::json& j, const DiagnosticPath& p) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : p.steps) {
    steps.push_back({{"node", s.node_id}, {"attribute", s.attribute}, {"label", s.label}});
  }
  j = {{"tree", p.tree_id}, {"k", p.index}, {"steps", std::move(steps)}, {"leaf", p.leaf_id},
       {"diagnosis", p.diagnosis}};
}

}  // namespace goatrag::treex
