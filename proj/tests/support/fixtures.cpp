#include "support/fixtures.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "goatrag/generate.hpp"
#include "goatrag/llm.hpp"
#include "goatrag/text.hpp"
#include "goatrag/workspace.hpp"

namespace fixture {

using namespace goatrag;

std::filesystem::path source_dir() { return GOATRAG_SOURCE_DIR; }
std::filesystem::path sample_dir() { return source_dir() / "data" / "sample"; }

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

treex::DecisionTree lamb_tree() {
  const auto p = sample_dir() / "lamb_diarrhea.yaml";
  return treex::load_tree(read(p), p.filename().string());
}

TempDir::TempDir() {
  static std::size_t counter = 0;
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  do {
    path_ = base / ("goatrag-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  } while (std::filesystem::exists(path_));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

OneHotEmbedder::OneHotEmbedder(std::vector<std::string> vocab) : vocab_(std::move(vocab)) {}

embed::Vector OneHotEmbedder::embed(std::string_view text) const {
  embed::Vector v(vocab_.size(), 0.0);
  for (const auto& t : text::tokenize(text)) {
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      if (vocab_[i] == t) v[i] += 1.0;
    }
  }
  embed::l2_normalize(v);
  return v;
}

namespace {

const std::vector<std::string> kWords = {
    "hay",    "straw",  "kid",    "doe",    "buck",   "udder",  "worm",   "pasture",
    "barn",   "fence",  "water",  "salt",   "mineral", "grain", "silage", "fiber",
    "hoof",   "teat",   "milk",   "cheese", "vaccine", "tick",  "lice",   "manure",
    "browse", "clover", "alfalfa", "oats",  "barley", "molasses", "copper", "zinc"};

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

std::string join_words(const std::vector<std::string>& words) { return text::join(words, " "); }

RandomTree random_tree(std::mt19937_64& rng, std::size_t max_depth) {
  std::vector<treex::Node> nodes;
  std::vector<treex::Edge> edges;
  std::vector<std::size_t> depths;
  std::size_t next = 0;
  // Returns the id of the subtree root.
  auto grow = [&](auto& self, std::size_t depth) -> std::string {
    const std::string id = "n" + std::to_string(next++);
    const double p_internal = depth == 0 ? 0.9 : 0.65;
    const bool internal = depth < max_depth && std::bernoulli_distribution(p_internal)(rng);
    if (!internal) {
      nodes.push_back({id, treex::Outcome{"Outcome " + id + "."}});
      depths.push_back(depth);
      return id;
    }
    const std::string attr = "attribute " + std::to_string(depth);
    nodes.push_back({id, treex::Condition{attr, "Please give the " + attr + "."}});
    const std::size_t fan = pick(rng, 2, 3);
    for (std::size_t b = 0; b < fan; ++b) {
      const std::string label = kWords[pick(rng, 0, kWords.size() - 1)] + " " + std::to_string(b);
      const std::string child = self(self, depth + 1);
      edges.push_back({id, label, child});
    }
    return id;
  };
  const std::string root = grow(grow, 0);
  RandomTree out{treex::DecisionTree::build("random", Domain::DiseasePrevention, std::move(nodes),
                                            std::move(edges), root, {"sick"}, "My goat is sick"),
                 std::move(depths)};
  return out;
}

RandomCorpus random_corpus(std::mt19937_64& rng, std::size_t max_chunks, std::size_t vocab) {
  RandomCorpus c;
  const std::size_t n = pick(rng, 1, max_chunks);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> words;
    const std::size_t len = pick(rng, 1, 30);
    for (std::size_t k = 0; k < len; ++k) words.push_back(kWords[pick(rng, 0, vocab - 1)]);
    char id[32];
    std::snprintf(id, sizeof id, "c%03zu", i);
    retrieval::IndexedChunk ch;
    ch.id = id;
    ch.doc_id = "doc";
    ch.text = join_words(words);
    ch.ordinal = i;
    c.chunks.push_back(ch);
    c.tokens.push_back(words);
    c.ids.push_back(id);
  }
  return c;
}

std::vector<std::string> random_query(std::mt19937_64& rng, std::size_t max_terms, std::size_t vocab) {
  std::vector<std::string> q;
  const std::size_t len = pick(rng, 1, max_terms);
  // Draw from a slightly larger range so some terms are out of vocabulary.
  for (std::size_t k = 0; k < len; ++k) q.push_back(kWords[pick(rng, 0, std::min(vocab + 4, kWords.size()) - 1)]);
  return q;
}

tablex::Table random_table(std::mt19937_64& rng, std::size_t max_rows, std::size_t max_cols) {
  tablex::Table t;
  t.id = "random";
  const std::size_t rows = pick(rng, 1, max_rows);
  const std::size_t cols = pick(rng, 1, max_cols);
  for (std::size_t j = 0; j < cols; ++j) {
    t.headers.push_back(kWords[pick(rng, 0, kWords.size() - 1)] + " header" + std::string(1, char('a' + j)));
  }
  std::size_t serial = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<std::string> row;
    for (std::size_t j = 0; j < cols; ++j) {
      ++serial;
      // Every value carries a token used nowhere else in the table.
      switch (pick(rng, 0, 2)) {
        case 0: row.push_back(std::to_string(100 + serial) + ".50"); break;
        case 1: row.push_back("Item" + std::to_string(serial)); break;
        default: row.push_back(kWords[pick(rng, 0, kWords.size() - 1)] + " mix" + std::to_string(serial)); break;
      }
    }
    t.cells.push_back(std::move(row));
  }
  return t;
}

namespace {

struct Section {
  const char* heading;
  const char* body;
};

struct Article {
  const char* id;
  Domain domain;
  std::vector<Section> sections;
};

// Bodies avoid the question template words ("what", "does", "section",
// "cover", "the") and each heading uses words found nowhere else.
const std::vector<Article> kArticles = {
    {"art-parasites", Domain::DiseasePrevention,
     {{"BARBER POLE", "Haemonchus contortus feeds on blood so infected goats become anemic and weak within days."},
      {"FAMACHA SCORING", "Compare inner eyelid colour against a five point chart every fortnight during grazing months."}}},
    {"art-minerals", Domain::NutritionManagement,
     {{"COPPER BALANCE", "Goats tolerate far more copper than sheep yet excess intake still damages liver tissue over time."},
      {"LOOSE SALT", "Provide loose mineral salt year round because block licks wear teeth and limit daily intake."}}},
    {"art-kidding", Domain::RearingManagement,
     {{"COLOSTRUM TIMING", "Newborn kids need warm colostrum within one hour after birth to absorb protective antibodies."},
      {"NAVEL DIPPING", "Dip each navel cord in seven percent iodine solution soon after delivery to stop infection."}}},
    {"art-dairy", Domain::GoatMilkManagement,
     {{"STRIP CUP", "Squirt first streams from each teat into a dark cup and check for clots or flakes."},
      {"RAPID CHILLING", "Chill fresh milk below four degrees Celsius within two hours so bacterial counts stay low."}}},
    {"art-basics", Domain::BasicFarmingKnowledge,
     {{"FENCE HEIGHT", "Woven wire fencing at least four feet tall keeps agile goats inside their paddock."},
      {"SHELTER DRAFTS", "Goats dislike rain and drafts so a dry three sided shed protects them well."}}},
};

}  // namespace

Ablation ablation_fixture() {
  Ablation a;
  llm::MockBackend mock;
  for (const auto& art : kArticles) {
    std::string body;
    for (const auto& s : art.sections) body += std::string(s.heading) + "\n" + s.body + "\n";
    corpus::DocumentMeta meta;
    meta.title = art.id;
    meta.domain = art.domain;
    meta.provenance = std::string(art.id) + ".md";
    meta.id = art.id;
    a.documents.push_back(corpus::ingest_document(body, meta));
    for (const auto& chunk : corpus::chunk_document(a.documents.back())) {
      auto qa = generate::generate_text_qa(mock, chunk, art.domain, QAKind::Text);
      a.pairs.insert(a.pairs.end(), qa.begin(), qa.end());
    }
  }

  tablex::Table rations;
  rations.id = "doe-rations";
  rations.domain = Domain::NutritionManagement;
  rations.caption = "Daily feed allowances for dairy does";
  rations.headers = {"Stage", "Hay (kg)", "Concentrate (kg)", "Crude protein (%)"};
  rations.cells = {{"Dry doe", "2.0", "0.25", "12"},
                   {"Late pregnancy", "2.0", "0.5", "14"},
                   {"Early lactation", "2.5", "1.0", "16"}};
  const auto narrative = tablex::textualize_table(rations, tablex::TemplateParser{});
  a.documents.push_back(workspace::table_document(rations, narrative));
  const char* table_questions[] = {"Which allowances suit a dry doe?", "Which allowances suit late pregnancy?",
                                   "Which allowances suit early lactation?"};
  for (std::size_t i = 0; i < rations.cells.size(); ++i) {
    corpus::QAPair p;
    p.id = "doe-rations/q" + std::to_string(i + 1);
    p.kind = QAKind::Table;
    p.domain = Domain::NutritionManagement;
    p.question = table_questions[i];
    p.answer = narrative.row_statements[i];
    p.source_refs = {"doe-rations"};
    a.pairs.push_back(p);
  }

  a.trees.push_back(lamb_tree());
  const auto tree_qa = treex::generate_tree_qa(a.trees.back());
  a.documents.push_back(workspace::tree_document(a.trees.back(), tree_qa));
  a.pairs.insert(a.pairs.end(), tree_qa.pairs.begin(), tree_qa.pairs.end());

  struct Novel {
    const char* id;
    Domain domain;
    const char* question;
    const char* key;
    const char* answer;
    const char* url;
  };
  const Novel novel[] = {
      {"novel/capripox", Domain::DiseasePrevention, "How fast can capripox jump between neighbouring villages?",
       "capripox",
       "Capripox outbreaks usually travel between nearby villages within three weeks through shared markets and "
       "grazing commons.",
       "https://www.fao.org/capripox"},
      {"novel/selenium", Domain::NutritionManagement, "Latest research about selenium supplementation dosing?",
       "selenium",
       "Recent trials recommend 0.3 milligrams of selenium per kilogram of dry matter for pregnant does on deficient "
       "soils.",
       "https://vetmed.example.edu/selenium"},
  };
  std::map<std::string, std::vector<websearch::RawResult>> web;
  for (const auto& n : novel) {
    corpus::QAPair p;
    p.id = n.id;
    p.kind = QAKind::Novel;
    p.domain = n.domain;
    p.question = n.question;
    p.answer = n.answer;
    a.pairs.push_back(p);
    web[n.key] = {{std::string("Result for ") + n.key, n.url, n.answer}};
  }
  a.search = std::make_shared<websearch::FixtureSearchProvider>(std::move(web));
  return a;
}

}  // namespace fixture
