#include "goatrag/workspace.hpp"

#include <algorithm>
#include <set>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"
#include "goatrag/text.hpp"

namespace goatrag::workspace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + p.string());
}

namespace {

std::string stem_of(const std::string& name) { return fs::path(name).stem().string(); }

std::string ext_of(const std::string& name) { return text::to_lower_ascii(fs::path(name).extension().string()); }

// "key: value" -> (lowercased key, trimmed value)
std::optional<std::pair<std::string, std::string>> key_value(std::string_view line) {
  const auto colon = line.find(':');
  if (colon == line.npos) return std::nullopt;
  const auto key = text::trim(line.substr(0, colon));
  if (key.empty() || key.find(' ') != key.npos) return std::nullopt;
  return std::make_pair(text::to_lower_ascii(key), std::string(text::trim(line.substr(colon + 1))));
}

}  // namespace

corpus::Document parse_article(std::string_view content, const std::string& file_name) {
  const std::string src = text::normalize_line_endings(content);
  const auto lines = text::split_lines(src);
  std::map<std::string, std::string> header;
  std::size_t body_start = 0;
  // A header is recognised only when the "---" terminator is present.
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]) == "---") {
      bool ok = i > 0;
      for (std::size_t k = 0; k < i && ok; ++k) {
        if (text::is_blank(lines[k])) continue;
        ok = key_value(lines[k]).has_value();
      }
      if (ok) {
        for (std::size_t k = 0; k < i; ++k) {
          if (auto kv = key_value(lines[k])) header[kv->first] = kv->second;
        }
        body_start = i + 1;
      }
      break;
    }
    if (!text::is_blank(lines[i]) && !key_value(lines[i])) break;
  }
  std::vector<std::string> body_lines;
  for (std::size_t i = body_start; i < lines.size(); ++i) body_lines.emplace_back(lines[i]);
  std::string body = text::join(body_lines, "\n");
  while (!body.empty() && body.front() == '\n') body.erase(body.begin());

  if (!header.count("domain")) {
    throw Error(ErrorCode::FormatError, file_name + ": article header has no 'domain'");
  }
  corpus::DocumentMeta meta;
  meta.title = header.count("title") ? header["title"] : stem_of(file_name);
  meta.domain = domain_from_string(header["domain"], file_name);
  meta.kind = SourceKind::Article;
  meta.provenance = header.count("provenance") ? header["provenance"] : file_name;
  meta.id = header.count("id") ? header["id"] : stem_of(file_name);
  try {
    return corpus::ingest_document(body, std::move(meta));
  } catch (const Error& e) {
    throw Error(e.code(), file_name + ": " + e.what(), e.detail());
  }
}

tablex::Table parse_table_file(std::string_view content, const std::string& file_name) {
  const std::string src = text::normalize_line_endings(content);
  std::map<std::string, std::string> meta;
  std::size_t pos = 0;
  while (pos < src.size() && src[pos] == '#') {
    const auto nl = src.find('\n', pos);
    const std::string_view line(src.data() + pos + 1, (nl == src.npos ? src.size() : nl) - pos - 1);
    if (auto kv = key_value(line)) meta[kv->first] = kv->second;
    pos = nl == src.npos ? src.size() : nl + 1;
  }
  char delim = ext_of(file_name) == ".tsv" ? '\t' : ',';
  if (meta.count("delimiter")) {
    const auto& d = meta["delimiter"];
    delim = d == "tab" || d == "\\t" ? '\t' : (d.empty() ? delim : d.front());
  }
  if (!meta.count("domain")) throw Error(ErrorCode::FormatError, file_name + ": table has no '# domain:' line");
  std::optional<std::string> caption;
  if (meta.count("caption")) caption = meta["caption"];
  return tablex::parse_dsv(std::string_view(src).substr(pos), delim,
                           meta.count("id") ? meta["id"] : stem_of(file_name),
                           domain_from_string(meta["domain"], file_name), caption);
}

namespace {

void check_unique(const Sources& s) {
  std::set<std::string> ids;
  auto add = [&](const std::string& id, const char* what) {
    if (!ids.insert(id).second) throw Error(ErrorCode::DuplicateId, std::string(what) + " id '" + id + "' is used twice");
  };
  for (const auto& d : s.articles) add(d.id, "document");
  for (const auto& t : s.tables) add(t.id, "table");
  for (const auto& t : s.trees) add(t.id(), "tree");
}

void classify_file(Sources& out, const std::string& name, const std::string& content) {
  const std::string ext = ext_of(name);
  if (ext == ".md" || ext == ".txt") {
    out.articles.push_back(parse_article(content, name));
  } else if (ext == ".csv" || ext == ".tsv") {
    out.tables.push_back(parse_table_file(content, name));
  } else if (ext == ".json" || ext == ".yaml" || ext == ".yml") {
    out.trees.push_back(treex::load_tree(content, name));
  }
}

}  // namespace

Sources load_uploads(const std::map<std::string, std::string>& files) {
  Sources out;
  for (const auto& [name, content] : files) classify_file(out, name, content);
  check_unique(out);
  return out;
}

Sources load_source_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
  Sources out;
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) classify_file(out, fs::relative(p, dir).generic_string(), read_file(p));
    check_unique(out);
    return out;
  }

  json m;
  try {
    m = json::parse(read_file(manifest));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, manifest.string() + ": " + e.what());
  }
  auto entry_path = [&](const json& e, const char* section) {
    if (e.is_string()) return e.get<std::string>();
    if (!e.is_object() || !e.contains("path") || !e["path"].is_string()) {
      throw Error(ErrorCode::FormatError, std::string("manifest ") + section + " entry needs a 'path'");
    }
    return e["path"].get<std::string>();
  };
  for (const auto& e : m.value("documents", json::array())) {
    const auto rel = entry_path(e, "documents");
    std::string content = read_file(dir / rel);
    if (e.is_object() && e.contains("domain")) {
      // Manifest metadata stands in for a missing file header.
      std::string header;
      for (const char* key : {"title", "domain", "id", "provenance"}) {
        if (e.contains(key)) header += std::string(key) + ": " + e[key].get<std::string>() + "\n";
      }
      if (content.find("\n---") == std::string::npos) content = header + "---\n" + content;
    }
    out.articles.push_back(parse_article(content, rel));
  }
  for (const auto& e : m.value("tables", json::array())) {
    const auto rel = entry_path(e, "tables");
    std::string content = read_file(dir / rel);
    std::string header;
    if (e.is_object()) {
      for (const char* key : {"id", "caption", "domain", "delimiter"}) {
        if (e.contains(key)) header += std::string("# ") + key + ": " + e[key].get<std::string>() + "\n";
      }
    }
    out.tables.push_back(parse_table_file(header + content, rel));
  }
  for (const auto& e : m.value("trees", json::array())) {
    const auto rel = entry_path(e, "trees");
    out.trees.push_back(treex::load_tree(read_file(dir / rel), rel));
  }
  check_unique(out);
  return out;
}

corpus::Document table_document(const tablex::Table& t, const tablex::TableNarrative& n) {
  corpus::Document d;
  d.id = t.id;
  d.title = t.caption.value_or(t.id);
  d.domain = t.domain;
  d.kind = SourceKind::Table;
  d.provenance = "table:" + t.id;
  std::vector<std::string> paras;
  for (auto line : text::split_lines(n.unified_text)) {
    if (!text::is_blank(line)) paras.emplace_back(line);
  }
  d.body = text::join(paras, "\n\n");
  return d;
}

corpus::Document tree_document(const treex::DecisionTree& tree, const treex::TreeQADataset& qa) {
  corpus::Document d;
  d.id = tree.id();
  d.title = tree.presentation().empty() ? tree.id() : tree.presentation();
  d.domain = tree.domain();
  d.kind = SourceKind::Tree;
  d.provenance = "tree:" + tree.id();
  std::vector<std::string> paras;
  for (const auto& p : tree.paths()) paras.push_back(treex::textualize_path(p));
  for (const auto& pair : qa.pairs) paras.push_back("Q: " + pair.question + "\nA: " + pair.answer);
  d.body = text::join(paras, "\n\n");
  return d;
}

Knowledge textualize(const Sources& sources, const tablex::SemanticParser& parser) {
  Knowledge k;
  k.documents = sources.articles;
  for (const auto& t : sources.tables) {
    auto narrative = tablex::textualize_table(t, parser);
    k.reports.push_back(tablex::check_semantic_preservation(t, narrative.unified_text));
    k.documents.push_back(table_document(t, narrative));
    k.narratives.push_back(std::move(narrative));
  }
  for (const auto& tree : sources.trees) {
    auto qa = treex::generate_tree_qa(tree);
    k.documents.push_back(tree_document(tree, qa));
    k.tree_qa.insert(k.tree_qa.end(), qa.pairs.begin(), qa.pairs.end());
  }
  return k;
}

json table_to_json(const tablex::Table& t) {
  json j = {{"id", t.id}, {"domain", to_string(t.domain)}, {"headers", t.headers}, {"cells", t.cells}};
  j["caption"] = t.caption ? json(*t.caption) : json(nullptr);
  return j;
}

tablex::Table table_from_json(const json& j) {
  tablex::Table t;
  t.id = j.at("id").get<std::string>();
  t.domain = domain_from_string(j.at("domain").get<std::string>(), "table " + t.id);
  t.headers = j.at("headers").get<std::vector<std::string>>();
  t.cells = j.at("cells").get<std::vector<std::vector<std::string>>>();
  if (j.contains("caption") && j["caption"].is_string()) t.caption = j["caption"].get<std::string>();
  return t;
}

Workspace::Workspace(fs::path root) : root_(std::move(root)) {}

void Workspace::save_sources(const Sources& s) const {
  json docs = json::array();
  for (const auto& d : s.articles) docs.push_back(d);
  json tables = json::array();
  for (const auto& t : s.tables) tables.push_back(table_to_json(t));
  json trees = json::array();
  for (const auto& t : s.trees) trees.push_back(treex::tree_to_json(t));
  write_file(sources_path(), json{{"format_version", 1}, {"articles", docs}, {"tables", tables}, {"trees", trees}}.dump(2));
}

Sources Workspace::load_sources() const {
  if (!fs::exists(sources_path())) {
    throw Error(ErrorCode::IoError, "no ingested sources in " + root_.string() + " (run ingest first)");
  }
  Sources s;
  try {
    const json j = json::parse(read_file(sources_path()));
    for (const auto& d : j.at("articles")) s.articles.push_back(d.get<corpus::Document>());
    for (const auto& t : j.at("tables")) s.tables.push_back(table_from_json(t));
    for (const auto& t : j.at("trees")) s.trees.push_back(treex::load_tree(t.dump(), "sources.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, sources_path().string() + ": " + e.what());
  }
  return s;
}

void Workspace::save_knowledge(const Knowledge& k) const {
  json docs = json::array();
  for (const auto& d : k.documents) docs.push_back(d);
  write_file(corpus_path(), json{{"format_version", 1}, {"documents", docs}}.dump(2));
  for (const auto& n : k.narratives) write_file(root_ / "narratives" / (n.source + ".txt"), n.unified_text + "\n");
  for (const auto& r : k.reports) {
    write_file(reports_dir() / (r.source + ".preservation.json"), json(r).dump(2) + "\n");
  }
  write_file(qa_dir() / "tree_qa.jsonl", corpus::write_qa_records(k.tree_qa));
}

std::vector<corpus::Document> Workspace::load_documents() const {
  if (!fs::exists(corpus_path())) return load_sources().articles;
  std::vector<corpus::Document> out;
  try {
    const json j = json::parse(read_file(corpus_path()));
    for (const auto& d : j.at("documents")) out.push_back(d.get<corpus::Document>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, corpus_path().string() + ": " + e.what());
  }
  return out;
}

}  // namespace goatrag::workspace
