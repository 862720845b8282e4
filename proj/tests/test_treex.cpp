#include <gtest/gtest.h>

#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"
#include "goatrag/treex.hpp"
#include "oracles/subset_oracle.hpp"
#include "support/fixtures.hpp"

using namespace goatrag;
using treex::Condition;
using treex::Outcome;

namespace {

treex::Node cond(std::string id, std::string attr) { return {std::move(id), Condition{std::move(attr), ""}}; }
treex::Node leaf(std::string id, std::string diag) { return {std::move(id), Outcome{std::move(diag)}}; }

// Rule named in the MalformedTree detail.
std::string rule_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedTree) << e.what();
    return e.detail();
  }
  return "none";
}

treex::DecisionTree binary_depth2() {
  return treex::DecisionTree::build(
      "b2", Domain::DiseasePrevention,
      {cond("r", "fever"), cond("x", "cough"), cond("y", "cough"), leaf("l1", "A"), leaf("l2", "B"),
       leaf("l3", "C"), leaf("l4", "D")},
      {{"r", "yes", "x"}, {"r", "no", "y"}, {"x", "yes", "l1"}, {"x", "no", "l2"}, {"y", "yes", "l3"},
       {"y", "no", "l4"}},
      "r");
}

const std::string kViralFull =
    "If severity is mild diarrhea and duration is 1–3 weeks and clinical pattern is variable signs & lambs "
    "limping then the likely diagnosis is Rota/coronavirus/Giardia.";

}  // namespace

TEST(Paths, Counts) {
  const auto single = treex::DecisionTree::build("s", Domain::DiseasePrevention, {leaf("only", "Healthy")}, {}, "only");
  EXPECT_EQ(treex::enumerate_paths(single).size(), 1u);
  EXPECT_EQ(treex::enumerate_paths(binary_depth2()).size(), 4u);
}

TEST(Paths, DepthFirstSortedLabels) {
  const auto paths = binary_depth2().paths();
  ASSERT_EQ(paths.size(), 4u);
  // "no" sorts before "yes".
  EXPECT_EQ(paths[0].leaf_id, "l4");
  EXPECT_EQ(paths[3].leaf_id, "l1");
  for (std::size_t k = 0; k < paths.size(); ++k) EXPECT_EQ(paths[k].index, k + 1);
}

TEST(Validation, RulesAreNamed) {
  const auto D = Domain::DiseasePrevention;
  using treex::DecisionTree;
  EXPECT_EQ(rule_of([&] { DecisionTree::build("t", D, {leaf("a", "x"), leaf("a", "y")}, {}, "a"); }),
            "unique-node-id");
  EXPECT_EQ(rule_of([&] { DecisionTree::build("t", D, {cond("r", "s"), leaf("a", "x")}, {{"r", "1", "zz"}}, "r"); }),
            "edge-endpoint");
  EXPECT_EQ(rule_of([&] {
              DecisionTree::build("t", D, {cond("r", "s"), leaf("a", "x")}, {{"r", "1", "a"}}, "r");
            }),
            "internal-branching");
  EXPECT_EQ(rule_of([&] {
              DecisionTree::build("t", D, {cond("r", "s"), leaf("a", "x"), leaf("b", "y")},
                                  {{"r", "1", "a"}, {"r", "1", "b"}}, "r");
            }),
            "distinct-branch-labels");
  EXPECT_EQ(rule_of([&] {
              DecisionTree::build("t", D, {cond("r", "s"), cond("c", "s"), leaf("a", "x"), leaf("b", "y"),
                                           leaf("d", "z")},
                                  {{"r", "1", "c"}, {"r", "2", "d"}, {"c", "1", "a"}, {"c", "2", "b"}}, "r");
            }),
            "unique-attribute-per-path");
  EXPECT_EQ(rule_of([&] {
              DecisionTree::build("t", D, {cond("r", "s"), leaf("a", "x"), leaf("b", "y"), leaf("c", "z")},
                                  {{"r", "1", "a"}, {"r", "2", "b"}}, "r");
            }),
            "reachable-acyclic");
  EXPECT_EQ(rule_of([&] {
              DecisionTree::build("t", D, {cond("r", "s"), leaf("a", "x"), leaf("b", "y")},
                                  {{"r", "1", "a"}, {"r", "2", "b"}, {"a", "3", "b"}}, "r");
            }),
            "leaf-has-branches");
  EXPECT_EQ(rule_of([&] { DecisionTree::build("t", D, {leaf("a", "")}, {}, "a"); }), "leaf-diagnosis");
  EXPECT_EQ(rule_of([&] { DecisionTree::build("t", D, {leaf("a", "x")}, {}, "b"); }), "root");
}

TEST(Loader, LinePreciseErrors) {
  const std::string yaml =
      "id: t\n"
      "domain: disease\n"
      "root: r\n"
      "nodes:\n"
      "  - {id: r, attribute: s}\n"
      "  - {id: a, diagnosis: x}\n"
      "  - {id: b, diagnosis: y}\n"
      "edges:\n"
      "  - {from: r, label: one, to: a}\n"
      "  - {from: r, label: two, to: q}\n";
  try {
    treex::load_tree(yaml, "bad.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.detail(), "edge-endpoint");
    EXPECT_NE(std::string(e.what()).find("bad.yaml:10"), std::string::npos) << e.what();
  }
}

TEST(Loader, JsonAndYamlAgree) {
  const auto tree = fixture::lamb_tree();
  const auto again = treex::load_tree(treex::tree_to_json(tree).dump(), "t.json");
  ASSERT_EQ(again.paths().size(), tree.paths().size());
  for (std::size_t k = 0; k < tree.paths().size(); ++k) {
    EXPECT_EQ(treex::textualize_path(again.paths()[k]), treex::textualize_path(tree.paths()[k]));
  }
  EXPECT_EQ(again.symptoms(), tree.symptoms());
}

TEST(Textualize, LambViralPath) {
  const auto tree = fixture::lamb_tree();
  std::set<std::string> texts;
  bool found = false;
  for (const auto& p : tree.paths()) {
    texts.insert(treex::textualize_path(p));
    found = found || treex::textualize_path(p) == kViralFull;
  }
  EXPECT_TRUE(found);
  EXPECT_EQ(texts.size(), tree.paths().size());  // injective on the fixture
}

TEST(Textualize, SingleCondition) {
  const auto tree = fixture::lamb_tree();
  const auto& p = tree.paths().back();  // severe branch, one condition
  ASSERT_EQ(p.depth(), 1u);
  EXPECT_EQ(treex::textualize_path(p),
            "If severity is severe diarrhea then the likely diagnosis is Bacterial enteritis such as E. coli or "
            "Clostridium perfringens.");
}

TEST(Resolve, LambScenarios) {
  const auto tree = fixture::lamb_tree();
  auto r = treex::resolve(tree, {{"severity", "mild diarrhea"},
                                 {"duration", "1–3 weeks"},
                                 {"clinical pattern", "variable signs & lambs limping"}});
  ASSERT_TRUE(std::holds_alternative<treex::Diagnosis>(r));
  EXPECT_EQ(std::get<treex::Diagnosis>(r).diagnosis, "Rota/coronavirus/Giardia.");

  r = treex::resolve(tree, {{"duration", "1–3 weeks"}, {"clinical pattern", "variable signs & lambs limping"}});
  const auto& one = std::get<treex::Clarification>(r);
  ASSERT_EQ(one.questions.size(), 1u);
  EXPECT_EQ(one.questions[0].attribute, "severity");
  EXPECT_EQ(treex::render_clarification(one),
            "Please tell me the severity of the diarrhea (mild diarrhea or severe diarrhea).");

  r = treex::resolve(tree, {});
  const auto& all = std::get<treex::Clarification>(r);
  ASSERT_EQ(all.questions.size(), 3u);
  EXPECT_EQ(all.questions[0].attribute, "severity");
  EXPECT_EQ(all.questions[1].attribute, "duration");
  EXPECT_EQ(all.questions[2].attribute, "clinical pattern");
  EXPECT_EQ(treex::render_clarification(all).rfind("To provide effective recommendations, please supply: 1. severity", 0),
            0u);
}

TEST(Resolve, Errors) {
  const auto tree = fixture::lamb_tree();
  auto code = [&](const treex::Evidence& ev) {
    try {
      treex::resolve(tree, ev);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code({{"colour", "red"}}), ErrorCode::UnknownAttribute);
  EXPECT_EQ(code({{"severity", "moderate"}}), ErrorCode::UnknownValue);
  // Every path of the lamb tree stays consistent with valid evidence, so use a tree whose
  // "stage" attribute takes different labels under each branch.
  const auto split = treex::DecisionTree::build(
      "split", Domain::DiseasePrevention,
      {cond("r", "age"), cond("a", "stage"), cond("b", "stage"), leaf("l1", "A"), leaf("l2", "B"), leaf("l3", "C"),
       leaf("l4", "D")},
      {{"r", "kid", "a"}, {"r", "adult", "b"}, {"a", "early", "l1"}, {"a", "late", "l2"}, {"b", "dry", "l3"},
       {"b", "milking", "l4"}},
      "r");
  try {
    treex::resolve(split, {{"age", "kid"}, {"stage", "dry"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ContradictoryEvidence);
  }
}

TEST(Resolve, CompletenessAndMonotonicity) {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 60; ++t) {
    const auto rt = fixture::random_tree(rng, 4);
    for (const auto& p : rt.tree.paths()) {
      treex::Evidence full;
      for (const auto& s : p.steps) full[s.attribute] = s.label;
      const auto r = treex::resolve(rt.tree, full);
      ASSERT_TRUE(std::holds_alternative<treex::Diagnosis>(r));
      EXPECT_EQ(std::get<treex::Diagnosis>(r).path.leaf_id, p.leaf_id);

      // Grow evidence along the path one assignment at a time.
      treex::Evidence ev;
      std::size_t prev_questions = SIZE_MAX;
      std::optional<std::string> prev_diag;
      std::vector<std::size_t> order(p.steps.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t step = 0; step <= order.size(); ++step) {
        const auto res = treex::resolve(rt.tree, ev);
        if (const auto* c = std::get_if<treex::Clarification>(&res)) {
          EXPECT_FALSE(prev_diag.has_value());
          EXPECT_LE(c->questions.size(), prev_questions);
          prev_questions = c->questions.size();
        } else {
          const auto& d = std::get<treex::Diagnosis>(res).diagnosis;
          if (prev_diag) {
            EXPECT_EQ(*prev_diag, d);
          }
          prev_diag = d;
        }
        if (step < order.size()) ev[p.steps[order[step]].attribute] = p.steps[order[step]].label;
      }
    }
  }
}

TEST(TreeQA, LambEightScenarios) {
  const auto tree = fixture::lamb_tree();
  const auto qa = treex::generate_tree_qa(tree);
  std::size_t k = 0;
  for (; k < tree.paths().size(); ++k) {
    if (tree.paths()[k].leaf_id == "viral") break;
  }
  ASSERT_LT(k, tree.paths().size());
  EXPECT_EQ(qa.per_path_counts[k], 8u);
  std::vector<const corpus::QAPair*> rows;
  for (std::size_t i = 0; i < qa.pairs.size(); ++i) {
    if (qa.indices[i].first == k + 1) rows.push_back(&qa.pairs[i]);
  }
  ASSERT_EQ(rows.size(), 8u);
  // Complete information first, all three missing last.
  EXPECT_EQ(rows[0]->question,
            "My lamb has diarrhea; severity is mild diarrhea and duration is 1–3 weeks and clinical pattern is "
            "variable signs & lambs limping. What is the likely diagnosis?");
  EXPECT_EQ(rows[0]->answer, kViralFull);
  EXPECT_EQ(rows[7]->question, "My lamb has diarrhea. What is the likely diagnosis?");
  EXPECT_NE(rows[7]->answer.find("please supply: 1. severity"), std::string::npos);
  // Rows 2-4 miss one attribute: severity, duration, clinical pattern.
  EXPECT_NE(rows[1]->answer.find("severity of the diarrhea"), std::string::npos) << rows[1]->answer;
  EXPECT_NE(rows[2]->answer.find("duration of the illness"), std::string::npos) << rows[2]->answer;
  EXPECT_NE(rows[3]->answer.find("clinical pattern"), std::string::npos) << rows[3]->answer;
  for (const auto* r : rows) EXPECT_EQ(r->kind, QAKind::Tree);
}

TEST(TreeQA, RootLeafAndSyntheticCounts) {
  const auto single = treex::DecisionTree::build("s", Domain::DiseasePrevention, {leaf("only", "Healthy")}, {}, "only");
  EXPECT_EQ(treex::generate_tree_qa(single).pairs.size(), 1u);
  const auto b2 = binary_depth2();
  const auto qa = treex::generate_tree_qa(b2);
  EXPECT_EQ(qa.pairs.size(), oracle::expected_pairs({2, 2, 2, 2}));
  EXPECT_EQ(qa.pairs.size(), 16u);
}

TEST(TreeQA, DepthCap) {
  const auto b2 = binary_depth2();
  try {
    treex::generate_tree_qa(b2, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PathTooDeep);
  }
}

TEST(Evidence, ExtractionAndRouting) {
  const auto tree = fixture::lamb_tree();
  const auto ev = treex::extract_evidence(tree, "My lamb has mild diarrhea for 1-3 weeks and is limping");
  EXPECT_EQ(ev.at("severity"), "mild diarrhea");
  EXPECT_EQ(ev.at("duration"), "1–3 weeks");
  EXPECT_FALSE(ev.count("clinical pattern"));
  EXPECT_EQ(treex::routing_overlap(tree, "my lamb has diarrhea"), 1u);
  EXPECT_EQ(treex::routing_overlap(tree, "how much hay per doe"), 0u);
}
