#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "goatrag/corpus.hpp"
#include "goatrag/embedding.hpp"
#include "goatrag/experiment.hpp"
#include "goatrag/generate.hpp"
#include "goatrag/kernels.hpp"
#include "goatrag/llm.hpp"
#include "goatrag/treex.hpp"
#include "goatrag/websearch.hpp"

namespace goatrag::eval {

struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<embed::Vector> vectors;  // one per token
};

// Each token embedded on its own by `embedder`.
TokenSequence embed_tokens(std::string_view text, const embed::EmbeddingProvider& embedder);

struct SimilarityScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Greedy max-cosine matching: precision averages, over candidate tokens, the
/// best cosine against any reference token; recall the reverse; f1 is
/// 2PR/(P+R), or 0 when P+R = 0. Throws EmptySequence and DimensionMismatch.
SimilarityScore similarity_score(const TokenSequence& candidate, const TokenSequence& reference,
                                 kernels::Exec exec = kernels::Exec::Parallel);
SimilarityScore similarity_score(std::string_view candidate, std::string_view reference,
                                 const embed::EmbeddingProvider& embedder);

struct Verdict {
  bool correct = false;
  double threshold = 0.85;
};

// Inclusive: f1 >= threshold is correct.
Verdict classify(const SimilarityScore& score, double threshold = 0.85);

enum class ErrorCategory { Omission, Hallucination, UnsupportedReasoning, NonError };
inline constexpr std::array<ErrorCategory, 4> kAllErrorCategories = {
    ErrorCategory::Omission, ErrorCategory::Hallucination, ErrorCategory::UnsupportedReasoning,
    ErrorCategory::NonError};
std::string_view to_string(ErrorCategory c) noexcept;
ErrorCategory error_category_from_string(std::string_view s);

struct EvalRecord {
  std::string pair_id;
  QAKind kind = QAKind::Text;
  Domain domain = Domain::BasicFarmingKnowledge;
  std::string question;
  std::string reference;
  std::string candidate;  // from the first repetition
  std::vector<SimilarityScore> runs;
  std::size_t correct_runs = 0;
  // Correct only when every repetition was classified correct.
  Verdict verdict;
  std::string route;
  bool used_web = false;
  std::optional<ErrorCategory> category;

  double accuracy() const noexcept {
    return runs.empty() ? 0.0 : static_cast<double>(correct_runs) / static_cast<double>(runs.size());
  }
};

/// Throws LabelOnCorrect unless some repetition of the record was incorrect.
void label_error(EvalRecord& record, ErrorCategory category);

struct Cell {
  std::size_t pairs = 0;
  double correct = 0.0;  // sum of per-record repetition accuracy
  // Percentage, 0 for an empty cell.
  double accuracy() const noexcept { return pairs ? 100.0 * correct / static_cast<double>(pairs) : 0.0; }
};

struct EvalReport {
  ExperimentConfig config;
  std::vector<EvalRecord> records;
  std::array<Cell, 5> per_domain{};
  std::map<QAKind, Cell> per_kind;
  Cell overall;
  // Mean accuracy over the domain columns that have pairs.
  double average = 0.0;
};

/// Recomputes every aggregate from the records.
void aggregate(EvalReport& report);

struct EvalDataset {
  // Articles, textualized tables and textualized trees; filtered per
  // configuration by kind.
  std::vector<corpus::Document> documents;
  std::vector<treex::DecisionTree> trees;
  std::vector<corpus::QAPair> pairs;
};

struct Components {
  const embed::EmbeddingProvider* embedder = nullptr;        // retrieval
  const embed::EmbeddingProvider* token_embedder = nullptr;  // scoring
  const llm::Backend* backend = nullptr;
  const websearch::SearchProvider* search = nullptr;
  const websearch::Allowlist* allowlist = nullptr;
  generate::PromptTemplate prompt_template = generate::PromptTemplate::builtin();
  std::size_t prompt_budget = 16000;
  // Pairs evaluated concurrently when > 1; records keep dataset order.
  int threads = 1;
};

/// Builds an index over the document kinds the toggles enable, answers every
/// pair `config.repetitions` times through the shared pipeline and scores
/// each answer against its reference. Throws MissingComponent.
EvalReport run_experiment(const ExperimentConfig& config, const EvalDataset& data, const Components& comps);

/// {pair_id, category} per line. Throws DanglingReference for unknown pairs.
void apply_error_labels(EvalReport& report, std::string_view jsonl);

// domain -> count per category (kAllErrorCategories order)
std::map<Domain, std::array<std::size_t, 4>> error_counts(const EvalReport& report);

/// Rows per experiment, columns the five domains and their average.
std::string render_accuracy_table(const std::vector<EvalReport>& reports);
/// Rows per experiment, columns per Q&A kind.
std::string render_kind_table(const std::vector<EvalReport>& reports);
std::string render_error_table(const EvalReport& report);

void to_json(nlohmann::json& j, const SimilarityScore& s);
void to_json(nlohmann::json& j, const EvalRecord& r);
void to_json(nlohmann::json& j, const EvalReport& r);
std::string write_records(const EvalReport& report);

}  // namespace goatrag::eval
