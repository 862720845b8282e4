#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"
#include "goatrag/workspace.hpp"
#include "support/fixtures.hpp"

using namespace goatrag;
using namespace goatrag::workspace;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Articles, HeaderAndDefaults) {
  const auto d = parse_article("domain: disease\n---\nBODY\nText here.\n", "notes/worm_guide.md");
  EXPECT_EQ(d.id, "worm_guide");
  EXPECT_EQ(d.title, "worm_guide");
  EXPECT_EQ(d.domain, Domain::DiseasePrevention);
  EXPECT_EQ(d.kind, SourceKind::Article);
  const auto named = parse_article("id: a1\ntitle: Worms\ndomain: disease_prevention\n---\nText.\n", "x.md");
  EXPECT_EQ(named.id, "a1");
  EXPECT_EQ(named.title, "Worms");
  EXPECT_EQ(code_of([] { parse_article("title: t\n---\nText.\n", "x.md"); }), ErrorCode::FormatError);
}

TEST(Tables, HeaderLines) {
  const auto t = parse_table_file("# id: feeds\n# domain: nutrition\n# caption: Feeds\nFeed\tCP\nHay\t12\n", "f.tsv");
  EXPECT_EQ(t.id, "feeds");
  EXPECT_EQ(t.caption, "Feeds");
  EXPECT_EQ(t.headers, (std::vector<std::string>{"Feed", "CP"}));
  EXPECT_EQ(t.cells.size(), 1u);
  EXPECT_EQ(code_of([] { parse_table_file("A,B\n1,2\n", "f.csv"); }), ErrorCode::FormatError);
}

TEST(SourceDir, SampleData) {
  const auto s = load_source_dir(fixture::sample_dir());
  EXPECT_EQ(s.articles.size(), 3u);
  ASSERT_EQ(s.tables.size(), 1u);
  EXPECT_EQ(s.tables[0].id, "doe-rations");
  ASSERT_EQ(s.trees.size(), 1u);
  EXPECT_EQ(s.trees[0].id(), "lamb-diarrhea");
  EXPECT_EQ(code_of([] { load_source_dir("/nonexistent/dir"); }), ErrorCode::IoError);
}

TEST(SourceDir, Manifest) {
  fixture::TempDir dir;
  write_file(dir.path() / "a.txt", "Goats need shade.\n");
  write_file(dir.path() / "t.csv", "K,V\nx,1\n");
  write_file(dir.path() / "ignored.md", "domain: disease\n---\nNot listed.\n");
  write_file(dir.path() / "manifest.json", R"({
    "documents": [{"path": "a.txt", "title": "Shade", "domain": "basic"}],
    "tables": [{"path": "t.csv", "id": "kv", "domain": "nutrition"}]
  })");
  const auto s = load_source_dir(dir.path());
  ASSERT_EQ(s.articles.size(), 1u);
  EXPECT_EQ(s.articles[0].title, "Shade");
  ASSERT_EQ(s.tables.size(), 1u);
  EXPECT_EQ(s.tables[0].id, "kv");
  write_file(dir.path() / "manifest.json", R"({"documents": [{"title": "x"}]})");
  EXPECT_EQ(code_of([&] { load_source_dir(dir.path()); }), ErrorCode::FormatError);
}

TEST(Uploads, DuplicateIds) {
  const std::map<std::string, std::string> files = {{"a.md", "id: same\ndomain: basic\n---\nOne.\n"},
                                                    {"b.md", "id: same\ndomain: basic\n---\nTwo.\n"}};
  EXPECT_EQ(code_of([&] { load_uploads(files); }), ErrorCode::DuplicateId);
}

TEST(Knowledge, TextualizeSample) {
  const auto s = load_source_dir(fixture::sample_dir());
  const auto k = textualize(s, tablex::TemplateParser{});
  std::size_t tables = 0, trees = 0;
  for (const auto& d : k.documents) {
    tables += d.kind == SourceKind::Table;
    trees += d.kind == SourceKind::Tree;
  }
  EXPECT_EQ(tables, 1u);
  EXPECT_EQ(trees, 1u);
  ASSERT_EQ(k.reports.size(), 1u);
  EXPECT_TRUE(k.reports[0].pass);
  EXPECT_EQ(k.tree_qa.size(), 22u);
  const auto& table_doc = *std::find_if(k.documents.begin(), k.documents.end(),
                                        [](const auto& d) { return d.kind == SourceKind::Table; });
  const auto chunks = corpus::chunk_document(table_doc);
  EXPECT_EQ(chunks.size(), 3u);  // one chunk per row
  EXPECT_NE(chunks[0].text.find("For Dry doe, Hay (kg) is 2.0"), std::string::npos) << chunks[0].text;
}

TEST(Workspace, SaveAndLoad) {
  fixture::TempDir dir;
  Workspace ws(dir.path() / "ws");
  EXPECT_EQ(code_of([&] { ws.load_sources(); }), ErrorCode::IoError);
  const auto s = load_source_dir(fixture::sample_dir());
  ws.save_sources(s);
  const auto back = ws.load_sources();
  EXPECT_EQ(back.articles.size(), s.articles.size());
  EXPECT_EQ(back.tables[0].cells, s.tables[0].cells);
  EXPECT_EQ(back.trees[0].paths().size(), s.trees[0].paths().size());
  const auto k = textualize(back, tablex::TemplateParser{});
  ws.save_knowledge(k);
  const auto docs = ws.load_documents();
  ASSERT_EQ(docs.size(), k.documents.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    EXPECT_EQ(docs[i].id, k.documents[i].id);
    EXPECT_EQ(docs[i].body, k.documents[i].body);
  }
  EXPECT_TRUE(ws.has(ws.corpus_path()));
}

TEST(Workspace, TableJsonRoundTrip) {
  const auto s = load_source_dir(fixture::sample_dir());
  const auto t = table_from_json(table_to_json(s.tables[0]));
  EXPECT_EQ(t.id, s.tables[0].id);
  EXPECT_EQ(t.headers, s.tables[0].headers);
  EXPECT_EQ(t.caption, s.tables[0].caption);
  EXPECT_EQ(t.domain, s.tables[0].domain);
}
