#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "goatrag/corpus.hpp"
#include "goatrag/error.hpp"
#include "goatrag/text.hpp"

using namespace goatrag;
using corpus::DocumentMeta;

namespace {

DocumentMeta article(Domain d = Domain::NutritionManagement) {
  DocumentMeta m;
  m.title = "t";
  m.domain = d;
  return m;
}

corpus::Document doc_with(std::string body) { return corpus::ingest_document(body, article()); }

}  // namespace

TEST(Ingest, KeepsLinesAndNormalizesEndings) {
  const auto d = corpus::ingest_document("FEEDING\nHay twice daily.", article());
  EXPECT_EQ(text::split_lines(d.body).size(), 2u);
  EXPECT_EQ(corpus::ingest_document("A\r\nb\r\n", article()).body, "A\nb\n");
}

TEST(Ingest, BlankIsAnError) {
  try {
    corpus::ingest_document("  \n", article());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDocument);
  }
}

TEST(Ingest, ContentHashIdsAreReproducible) {
  const auto a = doc_with("Same text.");
  const auto b = doc_with("Same text.");
  const auto c = doc_with("Other text.");
  EXPECT_EQ(a.id, b.id);
  EXPECT_NE(a.id, c.id);
}

TEST(Corpus, DuplicateIdRejected) {
  corpus::Corpus c;
  auto m = article();
  m.id = "x";
  c.ingest("one", m);
  EXPECT_THROW(c.ingest("two", m), Error);
  EXPECT_EQ(c.size(), 1u);
}

TEST(Subheading, Rule) {
  EXPECT_TRUE(corpus::is_subheading("FEEDING"));
  EXPECT_TRUE(corpus::is_subheading("WATER SUPPLY 2"));
  EXPECT_FALSE(corpus::is_subheading("Feeding"));
  EXPECT_FALSE(corpus::is_subheading("123"));
  EXPECT_FALSE(corpus::is_subheading("DO NOT OVERFEED."));
  EXPECT_FALSE(corpus::is_subheading(std::string(81, 'A')));
}

TEST(Segment, TwoHeadings) {
  const auto chunks = corpus::segment_by_subheadings(doc_with("FEEDING\nHay daily.\nHOUSING\nDry pens."));
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(*chunks[0].heading, "FEEDING");
  EXPECT_EQ(*chunks[1].heading, "HOUSING");
  EXPECT_EQ(chunks[0].ordinal, 0u);
  EXPECT_EQ(chunks[1].ordinal, 1u);
}

TEST(Segment, NoHeadingGivesOneChunk) {
  const auto chunks = corpus::segment_by_subheadings(doc_with("Goats browse.\nThey like shrubs."));
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_FALSE(chunks[0].heading.has_value());
}

TEST(Segment, PreambleThenHeading) {
  // Hand-applied rule: line 1 is prose, line 2 is all caps, line 3 prose.
  const auto chunks = corpus::segment_by_subheadings(doc_with("intro text here\nWATER SUPPLY\nClean troughs daily."));
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_FALSE(chunks[0].heading.has_value());
  EXPECT_EQ(chunks[0].text, "intro text here");
  EXPECT_EQ(*chunks[1].heading, "WATER SUPPLY");
}

TEST(Segment, ReconstructsBodyAndIsIdempotent) {
  const std::string body = "Preface line.\n\nFEEDING\nHay daily.\n\nHOUSING\nDry pens.\n";
  const auto d = doc_with(body);
  const auto chunks = corpus::segment_by_subheadings(d);
  EXPECT_EQ(corpus::reconstruct_body(chunks), d.body);
  for (const auto& c : chunks) {
    EXPECT_EQ(c.term_count, text::tokenize(c.text).size());
    auto sub = d;
    sub.body = c.text;
    const auto again = corpus::segment_by_subheadings(sub);
    ASSERT_EQ(again.size(), 1u);
    EXPECT_EQ(again[0].text, c.text);
  }
}

TEST(Chunking, NarrativesSplitOnBlankLines) {
  auto m = article();
  m.kind = SourceKind::Table;
  const auto d = corpus::ingest_document("For A, x is 1.\n\nFor B, x is 2.", m);
  const auto chunks = corpus::chunk_document(d);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[1].text, "For B, x is 2.");
}

TEST(Chunking, OversizedChunksReported) {
  const auto chunks = corpus::segment_by_subheadings(doc_with("A\none two three\nB\none"));
  EXPECT_EQ(corpus::oversized_chunks(chunks, 3), (std::vector<std::size_t>{0}));
}

namespace {

corpus::QAPair pair(std::string id, QAKind kind, Domain d, std::vector<std::string> refs = {}) {
  corpus::QAPair p;
  p.id = std::move(id);
  p.kind = kind;
  p.domain = d;
  p.question = "q";
  p.answer = "a";
  p.source_refs = std::move(refs);
  return p;
}

}  // namespace

TEST(Dataset, EmptyCorpusAllZero) {
  const auto split = corpus::assemble_dataset({});
  EXPECT_EQ(corpus::DatasetCounts::total(split.counts.train_total()), 0u);
  EXPECT_EQ(corpus::DatasetCounts::total(split.counts.validation_total()), 0u);
  EXPECT_EQ(corpus::DatasetCounts::total(split.counts.test), 0u);
}

TEST(Dataset, ThreeArticlesTwoPairsEach) {
  corpus::DatasetInput in;
  for (int i = 0; i < 3; ++i) {
    in.documents.push_back(doc_with("Article " + std::to_string(i) + "."));
    for (int k = 0; k < 2; ++k) {
      in.validation.push_back(pair("p" + std::to_string(i) + std::to_string(k), QAKind::Text,
                                   Domain::NutritionManagement, {in.documents.back().id}));
    }
  }
  const auto split = corpus::assemble_dataset(in);
  EXPECT_EQ(split.validation.at(QAKind::Text).size(), 6u);
  EXPECT_EQ(corpus::DatasetCounts::total(split.counts.validation[0]), 6u);
}

TEST(Dataset, DanglingReference) {
  corpus::DatasetInput in;
  in.validation.push_back(pair("p", QAKind::Text, Domain::DiseasePrevention, {"nowhere"}));
  try {
    corpus::assemble_dataset(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DanglingReference);
  }
}

TEST(Dataset, NovelOnlyInTest) {
  corpus::DatasetInput in;
  in.validation.push_back(pair("p", QAKind::Novel, Domain::DiseasePrevention));
  EXPECT_THROW(corpus::assemble_dataset(in), Error);
  in.test = in.validation;
  in.validation.clear();
  EXPECT_EQ(corpus::assemble_dataset(in).test.size(), 1u);
}

TEST(Dataset, DuplicatePairAcrossSplits) {
  corpus::DatasetInput in;
  in.validation.push_back(pair("p", QAKind::Text, Domain::DiseasePrevention));
  in.test.push_back(pair("p", QAKind::Text, Domain::DiseasePrevention));
  EXPECT_THROW(corpus::assemble_dataset(in), Error);
}

// Full-scale composition: train/validation/test tallies per domain.
TEST(Dataset, FullScaleComposition) {
  using Row = corpus::DatasetCounts::Row;
  const Row train_text{26, 68, 9, 16, 1}, train_tables{2, 51, 3, 0, 0}, train_trees{4, 0, 0, 1, 0};
  const Row val_text{236, 650, 58, 122, 10}, val_table{4, 58, 6, 0, 0}, val_tree{153, 0, 0, 27, 0};
  const Row test{15, 43, 13, 10, 5};
  corpus::DatasetInput in;
  int serial = 0;
  auto add_docs = [&](const Row& r, SourceKind kind) {
    for (std::size_t d = 0; d < 5; ++d) {
      for (std::size_t n = 0; n < r[d]; ++n) {
        auto m = article(kAllDomains[d]);
        m.kind = kind;
        in.documents.push_back(corpus::ingest_document("Body " + std::to_string(serial++) + ".", m));
      }
    }
  };
  auto add_pairs = [&](const Row& r, QAKind kind, std::vector<corpus::QAPair>& out) {
    for (std::size_t d = 0; d < 5; ++d) {
      for (std::size_t n = 0; n < r[d]; ++n) out.push_back(pair("q" + std::to_string(serial++), kind, kAllDomains[d]));
    }
  };
  add_docs(train_text, SourceKind::Article);
  add_docs(train_tables, SourceKind::Table);
  add_docs(train_trees, SourceKind::Tree);
  add_pairs(val_text, QAKind::Text, in.validation);
  add_pairs(val_table, QAKind::Table, in.validation);
  add_pairs(val_tree, QAKind::Tree, in.validation);
  add_pairs(test, QAKind::Text, in.test);

  const auto c = corpus::assemble_dataset(in).counts;
  EXPECT_EQ(corpus::DatasetCounts::total(c.train[0]), 120u);
  EXPECT_EQ(corpus::DatasetCounts::total(c.train[1]), 56u);
  EXPECT_EQ(corpus::DatasetCounts::total(c.train[2]), 5u);
  EXPECT_EQ(c.train_total(), (Row{32, 119, 12, 17, 1}));
  EXPECT_EQ(corpus::DatasetCounts::total(c.validation[0]), 1076u);
  EXPECT_EQ(corpus::DatasetCounts::total(c.validation[1]), 68u);
  EXPECT_EQ(corpus::DatasetCounts::total(c.validation[2]), 180u);
  EXPECT_EQ(c.validation_total(), (Row{393, 708, 64, 149, 10}));
  EXPECT_EQ(corpus::DatasetCounts::total(c.validation_total()), 1324u);
  EXPECT_EQ(corpus::DatasetCounts::total(c.test), 86u);

  const auto table = corpus::render_counts_table(c);
  EXPECT_NE(table.find("Val\tTotal Q&A\t393\t708\t64\t149\t10\t1324"), std::string::npos) << table;
}

TEST(Records, JsonlRoundTrip) {
  std::vector<corpus::QAPair> pairs = {pair("a", QAKind::Tree, Domain::DiseasePrevention, {"t"}),
                                       pair("b", QAKind::Novel, Domain::GoatMilkManagement)};
  const auto back = corpus::read_qa_records(corpus::write_qa_records(pairs));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].source_refs, (std::vector<std::string>{"t"}));
  EXPECT_EQ(back[1].kind, QAKind::Novel);
  EXPECT_EQ(back[1].domain, Domain::GoatMilkManagement);
}

TEST(Domains, ParseAliases) {
  EXPECT_EQ(parse_domain("disease_prevention"), Domain::DiseasePrevention);
  EXPECT_EQ(parse_domain("Nutrition Management"), Domain::NutritionManagement);
  EXPECT_EQ(parse_domain("feeding"), Domain::RearingManagement);
  EXPECT_EQ(parse_domain("milk"), Domain::GoatMilkManagement);
  EXPECT_FALSE(parse_domain("astronomy").has_value());
}
