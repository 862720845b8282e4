#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "goatrag/corpus.hpp"
#include "goatrag/llm.hpp"
#include "goatrag/websearch.hpp"

namespace goatrag::generate {

using websearch::ContextBlock;

/// Three sections introduced by "### system", "### context" and "### query".
/// The context section is instantiated once per block and must contain
/// {provenance} and {text} exactly once; the query section must contain
/// {question} exactly once.
struct PromptTemplate {
  std::string system;
  std::string context;
  std::string query;

  // Throws InvalidTemplate.
  static PromptTemplate parse(std::string_view content);
  static PromptTemplate load_file(const std::string& path);
  static PromptTemplate builtin();
};

struct Prompt {
  std::string system;
  std::string user;  // rendered blocks, blank line, rendered query
  std::vector<ContextBlock> blocks;
  std::string question;

  // system + "\n\n" + user
  std::string text() const;
  std::size_t byte_length() const;
};

/// Throws OversizePrompt when the rendered prompt is longer than max_bytes.
Prompt build_prompt(const PromptTemplate& t, std::string_view question,
                    std::vector<ContextBlock> blocks, std::size_t max_bytes);

/// Drops the lowest-ranked (last) blocks until the prompt fits; throws
/// OversizePrompt if even the block-free prompt does not.
Prompt fit_prompt(const PromptTemplate& t, std::string_view question,
                  std::vector<ContextBlock> blocks, std::size_t max_bytes);

struct Answer {
  std::string text;
  std::vector<std::string> citations;  // provenance of the prompt blocks, deduplicated
  std::string finish_reason;
  double latency_ms = 0.0;
};

Answer generate_answer(const llm::Backend& backend, const Prompt& prompt);

/// Question-answer pairs for one chunk: the heading line is stripped and the
/// backend reply is parsed as "Q:" / "A:" lines. Throws EmptyChunk when the
/// chunk has no body and BackendUnavailable when the reply has no pair.
std::vector<corpus::QAPair> generate_text_qa(const llm::Backend& backend, const corpus::Chunk& chunk,
                                             Domain domain, QAKind kind = QAKind::Text);

// Parses "Q: ... / A: ..." blocks; continuation lines join the current field.
std::vector<std::pair<std::string, std::string>> parse_qa_reply(std::string_view reply);

}  // namespace goatrag::generate
