#include "goatrag/generate.hpp"

#include <fstream>
#include <sstream>

#include "goatrag/error.hpp"
#include "goatrag/text.hpp"

namespace goatrag::generate {

namespace {

std::size_t count_of(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != hay.npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

// Substitutes placeholders in one pass over the template so that values
// containing brace sequences are left alone.
std::string fill(std::string_view tmpl, const std::vector<std::pair<std::string_view, std::string_view>>& vars) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool hit = false;
    for (const auto& [key, value] : vars) {
      if (tmpl.substr(i, key.size()) == key) {
        out += value;
        i += key.size();
        hit = true;
        break;
      }
    }
    if (!hit) out.push_back(tmpl[i++]);
  }
  return out;
}

std::string strip_edges(std::string_view s) {
  while (!s.empty() && s.front() == '\n') s.remove_prefix(1);
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string_view content) {
  const std::string src = text::normalize_line_endings(content);
  std::string* current = nullptr;
  PromptTemplate t;
  bool seen[3] = {false, false, false};
  std::string buf[3];
  int idx = -1;
  for (auto line : text::split_lines(src)) {
    const auto trimmed = text::trim(line);
    if (trimmed.starts_with("###")) {
      const std::string name = text::to_lower_ascii(text::trim(trimmed.substr(3)));
      if (name == "system") idx = 0;
      else if (name == "context") idx = 1;
      else if (name == "query") idx = 2;
      else throw Error(ErrorCode::InvalidTemplate, "unknown template section '" + name + "'");
      if (seen[idx]) throw Error(ErrorCode::InvalidTemplate, "section '" + name + "' appears twice");
      seen[idx] = true;
      current = &buf[idx];
      continue;
    }
    if (!current) {
      if (!text::is_blank(line)) throw Error(ErrorCode::InvalidTemplate, "text before the first section");
      continue;
    }
    *current += line;
    *current += '\n';
  }
  for (int i = 0; i < 3; ++i) {
    if (!seen[i]) {
      static constexpr const char* names[] = {"system", "context", "query"};
      throw Error(ErrorCode::InvalidTemplate, std::string("missing section '") + names[i] + "'");
    }
  }
  t.system = strip_edges(buf[0]);
  t.context = strip_edges(buf[1]);
  t.query = strip_edges(buf[2]);
  auto once = [](const std::string& section, std::string_view ph, const char* where) {
    const std::size_t n = count_of(section, ph);
    if (n != 1) {
      throw Error(ErrorCode::InvalidTemplate, std::string(where) + " section must contain " +
                                                  std::string(ph) + " exactly once, found " +
                                                  std::to_string(n));
    }
  };
  once(t.context, "{provenance}", "context");
  once(t.context, "{text}", "context");
  once(t.query, "{question}", "query");
  return t;
}

PromptTemplate PromptTemplate::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read template " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

PromptTemplate PromptTemplate::builtin() {
  return parse(
      "### system\n"
      "You are an assistant for goat farmers. Answer the question using the numbered context\n"
      "passages. Cite the sources you use in square brackets. If the context does not contain\n"
      "the answer, say so.\n"
      "### context\n"
      "[{provenance}] {text}\n"
      "### query\n"
      "Question: {question}\n"
      "Answer:\n");
}

std::string Prompt::text() const { return system + "\n\n" + user; }

std::size_t Prompt::byte_length() const { return system.size() + 2 + user.size(); }

Prompt build_prompt(const PromptTemplate& t, std::string_view question,
                    std::vector<ContextBlock> blocks, std::size_t max_bytes) {
  Prompt p;
  p.system = t.system;
  p.question = std::string(question);
  std::string rendered;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) rendered.push_back('\n');
    rendered += fill(t.context, {{"{provenance}", blocks[i].provenance}, {"{text}", blocks[i].text}});
  }
  p.user = rendered + "\n\n" + fill(t.query, {{"{question}", question}});
  p.blocks = std::move(blocks);
  if (p.byte_length() > max_bytes) {
    throw Error(ErrorCode::OversizePrompt, "prompt is " + std::to_string(p.byte_length()) +
                                               " bytes, budget is " + std::to_string(max_bytes));
  }
  return p;
}

Prompt fit_prompt(const PromptTemplate& t, std::string_view question,
                  std::vector<ContextBlock> blocks, std::size_t max_bytes) {
  for (;;) {
    try {
      return build_prompt(t, question, blocks, max_bytes);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OversizePrompt || blocks.empty()) throw;
      blocks.pop_back();
    }
  }
}

Answer generate_answer(const llm::Backend& backend, const Prompt& prompt) {
  llm::ChatRequest req;
  req.system = prompt.system;
  req.user = prompt.user;
  req.purpose = llm::Purpose::Answer;
  for (const auto& b : prompt.blocks) req.context.push_back(b.text);
  const auto resp = backend.complete(req);
  Answer a;
  a.text = resp.text;
  a.finish_reason = resp.finish_reason;
  a.latency_ms = resp.latency_ms;
  for (const auto& b : prompt.blocks) {
    if (std::find(a.citations.begin(), a.citations.end(), b.provenance) == a.citations.end()) {
      a.citations.push_back(b.provenance);
    }
  }
  return a;
}

std::vector<std::pair<std::string, std::string>> parse_qa_reply(std::string_view reply) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string q, a;
  int field = 0;  // 0 none, 1 question, 2 answer
  auto flush = [&] {
    const auto qq = text::collapse_whitespace(q);
    const auto aa = text::collapse_whitespace(a);
    if (!qq.empty() && !aa.empty()) out.emplace_back(qq, aa);
    q.clear();
    a.clear();
    field = 0;
  };
  const std::string src = text::normalize_line_endings(reply);
  for (auto line : text::split_lines(src)) {
    const auto t = text::trim(line);
    if (t.starts_with("Q:")) {
      flush();
      q = std::string(t.substr(2));
      field = 1;
    } else if (t.starts_with("A:") && field == 1) {
      a = std::string(t.substr(2));
      field = 2;
    } else if (field == 1) {
      q += " " + std::string(t);
    } else if (field == 2) {
      a += " " + std::string(t);
    }
  }
  flush();
  return out;
}

std::vector<corpus::QAPair> generate_text_qa(const llm::Backend& backend, const corpus::Chunk& chunk,
                                             Domain domain, QAKind kind) {
  std::string_view body = chunk.text;
  if (chunk.heading) {
    const auto nl = body.find('\n');
    if (nl == body.npos) {
      body = {};
    } else if (text::trim(body.substr(0, nl)) == *chunk.heading) {
      body.remove_prefix(nl + 1);
    }
  }
  if (text::is_blank(body)) throw Error(ErrorCode::EmptyChunk, "chunk '" + chunk.id + "' has no body text");

  llm::ChatRequest req;
  req.purpose = llm::Purpose::QaGeneration;
  req.system =
      "Write one question that the passage answers and its answer. Reply with a line starting "
      "'Q:' followed by a line starting 'A:'. Use only facts from the passage.";
  req.subject = chunk.heading;
  req.user = (chunk.heading ? "Section: " + *chunk.heading + "\n" : std::string()) + std::string(body);
  req.context = {text::collapse_whitespace(body)};
  const auto resp = backend.complete(req);
  const auto parsed = parse_qa_reply(resp.text);
  if (parsed.empty()) {
    throw Error(ErrorCode::BackendUnavailable, "backend reply has no Q/A pair", resp.text);
  }
  std::vector<corpus::QAPair> out;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    corpus::QAPair p;
    p.id = chunk.id + "/qa" + std::to_string(i + 1);
    p.kind = kind;
    p.domain = domain;
    p.question = parsed[i].first;
    p.answer = parsed[i].second;
    p.source_refs = {chunk.id};
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace goatrag::generate
