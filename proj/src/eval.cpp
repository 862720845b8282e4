#include "goatrag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"
#include "goatrag/pipeline.hpp"
#include "goatrag/retrieval.hpp"
#include "goatrag/text.hpp"

namespace goatrag::eval {

using nlohmann::json;

TokenSequence embed_tokens(std::string_view input, const embed::EmbeddingProvider& embedder) {
  TokenSequence seq;
  seq.tokens = text::tokenize(input);
  std::unordered_map<std::string, std::size_t> first;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    auto [it, fresh] = first.emplace(seq.tokens[i], i);
    seq.vectors.push_back(fresh ? embedder.embed(seq.tokens[i]) : seq.vectors[it->second]);
  }
  return seq;
}

namespace {

// Rows scaled to unit length; zero rows stay zero so their cosines are 0.
std::vector<double> unit_rows(const TokenSequence& s, std::size_t dim) {
  std::vector<double> out;
  out.reserve(s.vectors.size() * dim);
  for (const auto& v : s.vectors) {
    embed::Vector u = v;
    embed::l2_normalize(u);
    out.insert(out.end(), u.begin(), u.end());
  }
  return out;
}

}  // namespace

SimilarityScore similarity_score(const TokenSequence& candidate, const TokenSequence& reference,
                                 kernels::Exec exec) {
  if (candidate.vectors.empty() || reference.vectors.empty()) {
    throw Error(ErrorCode::EmptySequence, "similarity needs at least one token on each side");
  }
  const std::size_t dim = candidate.vectors.front().size();
  for (const auto* s : {&candidate, &reference}) {
    if (!s->tokens.empty() && s->tokens.size() != s->vectors.size()) {
      throw Error(ErrorCode::DimensionMismatch, "token and vector counts differ");
    }
    for (const auto& v : s->vectors) {
      if (v.size() != dim) throw Error(ErrorCode::DimensionMismatch, "token vectors differ in dimension");
    }
  }
  const std::size_t m = candidate.vectors.size();
  const std::size_t n = reference.vectors.size();
  const auto sim = kernels::gram(unit_rows(candidate, dim), unit_rows(reference, dim), dim, exec);

  double p = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double best = sim[i * n];
    for (std::size_t j = 1; j < n; ++j) best = std::max(best, sim[i * n + j]);
    p += best;
  }
  double r = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double best = sim[j];
    for (std::size_t i = 1; i < m; ++i) best = std::max(best, sim[i * n + j]);
    r += best;
  }
  SimilarityScore s;
  s.precision = p / static_cast<double>(m);
  s.recall = r / static_cast<double>(n);
  const double denom = s.precision + s.recall;
  s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
  return s;
}

SimilarityScore similarity_score(std::string_view candidate, std::string_view reference,
                                 const embed::EmbeddingProvider& embedder) {
  return similarity_score(embed_tokens(candidate, embedder), embed_tokens(reference, embedder));
}

Verdict classify(const SimilarityScore& score, double threshold) {
  return {score.f1 >= threshold, threshold};
}

std::string_view to_string(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::Omission: return "omission";
    case ErrorCategory::Hallucination: return "hallucination";
    case ErrorCategory::UnsupportedReasoning: return "unsupported_reasoning";
    case ErrorCategory::NonError: return "non_error";
  }
  return "omission";
}

ErrorCategory error_category_from_string(std::string_view s) {
  std::string v = text::to_lower_ascii(text::trim(s));
  std::replace(v.begin(), v.end(), '-', '_');
  std::replace(v.begin(), v.end(), ' ', '_');
  for (auto c : kAllErrorCategories) {
    if (v == to_string(c)) return c;
  }
  if (v == "nonerror") return ErrorCategory::NonError;
  if (v == "unsupportedreasoning") return ErrorCategory::UnsupportedReasoning;
  throw Error(ErrorCode::FormatError, "unknown error category '" + std::string(s) + "'");
}

void label_error(EvalRecord& record, ErrorCategory category) {
  if (record.correct_runs == record.runs.size()) {
    throw Error(ErrorCode::LabelOnCorrect, "record '" + record.pair_id + "' was answered correctly");
  }
  record.category = category;
}

void aggregate(EvalReport& report) {
  report.per_domain = {};
  report.per_kind.clear();
  report.overall = {};
  for (const auto& r : report.records) {
    const double acc = r.accuracy();
    for (Cell* c : {&report.per_domain[static_cast<std::size_t>(r.domain)], &report.per_kind[r.kind],
                    &report.overall}) {
      ++c->pairs;
      c->correct += acc;
    }
  }
  double sum = 0.0;
  std::size_t cols = 0;
  for (const auto& c : report.per_domain) {
    if (!c.pairs) continue;
    sum += c.accuracy();
    ++cols;
  }
  report.average = cols ? sum / static_cast<double>(cols) : 0.0;
}

EvalReport run_experiment(const ExperimentConfig& config, const EvalDataset& data, const Components& comps) {
  config.validate();
  const Toggles& on = config.toggles;
  if (!comps.backend) throw Error(ErrorCode::MissingComponent, "no generation backend", "backend");
  if (!comps.token_embedder) throw Error(ErrorCode::MissingComponent, "no token embedder", "token_embedder");
  if (on.local_retrieval && !comps.embedder) {
    throw Error(ErrorCode::MissingComponent, "local retrieval needs an embedding provider", "embedder");
  }
  if (on.web_search && !comps.search) {
    throw Error(ErrorCode::MissingComponent, "web search is enabled but no provider is configured", "search");
  }

  std::optional<retrieval::Index> index;
  if (on.local_retrieval) {
    std::vector<corpus::Document> docs;
    for (const auto& d : data.documents) {
      const bool keep = d.kind == SourceKind::Article ||
                        (d.kind == SourceKind::Table && on.table_textualization) ||
                        (d.kind == SourceKind::Tree && on.tree_textualization);
      if (keep) docs.push_back(d);
    }
    index = retrieval::Index::build(retrieval::chunks_of(docs), *comps.embedder, config.bm25);
  }

  pipeline::Resources res;
  res.index = index ? &*index : nullptr;
  res.embedder = comps.embedder;
  res.backend = comps.backend;
  res.search = on.web_search ? comps.search : nullptr;
  res.allowlist = comps.allowlist;
  res.prompt_template = comps.prompt_template;
  res.prompt_budget = comps.prompt_budget;
  for (const auto& t : data.trees) res.trees.push_back(&t);

  EvalReport report;
  report.config = config;
  report.records.resize(data.pairs.size());
  std::vector<std::exception_ptr> failures(data.pairs.size());

  auto evaluate = [&](std::size_t i) {
    const auto& pair = data.pairs[i];
    EvalRecord& rec = report.records[i];
    rec.pair_id = pair.id;
    rec.kind = pair.kind;
    rec.domain = pair.domain;
    rec.question = pair.question;
    rec.reference = pair.answer;
    const auto ref = embed_tokens(pair.answer, *comps.token_embedder);
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
      std::string candidate;
      try {
        const auto out = pipeline::run(res, pair.question, config);
        candidate = out.answer;
        if (rep == 0) {
          rec.route = out.route;
          rec.used_web = out.used_web;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyQuery) throw;
      }
      if (rep == 0) rec.candidate = candidate;
      const auto cand = embed_tokens(candidate, *comps.token_embedder);
      SimilarityScore s;
      if (!cand.vectors.empty() && !ref.vectors.empty()) s = similarity_score(cand, ref, kernels::Exec::Serial);
      rec.runs.push_back(s);
      if (classify(s, config.threshold).correct) ++rec.correct_runs;
    }
    rec.verdict = {rec.correct_runs == rec.runs.size(), config.threshold};
  };

  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(data.pairs.size());
#pragma omp parallel for schedule(dynamic) num_threads(comps.threads) if (comps.threads > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      evaluate(static_cast<std::size_t>(i));
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  aggregate(report);
  return report;
}

void apply_error_labels(EvalReport& report, std::string_view jsonl) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < report.records.size(); ++i) by_id.emplace(report.records[i].pair_id, i);
  const std::string src = text::normalize_line_endings(jsonl);
  std::size_t line_no = 0;
  for (auto line : text::split_lines(src)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, "error labels line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("pair_id") || !j["pair_id"].is_string() || !j.contains("category") ||
        !j["category"].is_string()) {
      throw Error(ErrorCode::FormatError,
                  "error labels line " + std::to_string(line_no) + ": needs string pair_id and category");
    }
    const auto id = j["pair_id"].get<std::string>();
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::DanglingReference,
                  "error labels line " + std::to_string(line_no) + ": unknown pair '" + id + "'");
    }
    label_error(report.records[it->second], error_category_from_string(j["category"].get<std::string>()));
  }
}

std::map<Domain, std::array<std::size_t, 4>> error_counts(const EvalReport& report) {
  std::map<Domain, std::array<std::size_t, 4>> out;
  for (auto d : kAllDomains) out[d] = {};
  for (const auto& r : report.records) {
    if (r.category) ++out[r.domain][static_cast<std::size_t>(*r.category)];
  }
  return out;
}

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_accuracy_table(const std::vector<EvalReport>& reports) {
  std::string out = "Experiment";
  for (auto d : kAllDomains) out += "\t" + std::string(display_name(d));
  out += "\tAverage\n";
  for (const auto& r : reports) {
    out += r.config.id;
    for (const auto& c : r.per_domain) out += "\t" + (c.pairs ? fixed2(c.accuracy()) : std::string("-"));
    out += "\t" + fixed2(r.average) + "\n";
  }
  return out;
}

std::string render_kind_table(const std::vector<EvalReport>& reports) {
  std::string out = "Experiment";
  for (auto k : kAllQAKinds) out += "\t" + std::string(to_string(k));
  out += "\tOverall\n";
  for (const auto& r : reports) {
    out += r.config.id;
    for (auto k : kAllQAKinds) {
      auto it = r.per_kind.find(k);
      out += "\t" + (it == r.per_kind.end() ? std::string("-") : fixed2(it->second.accuracy()));
    }
    out += "\t" + fixed2(r.overall.accuracy()) + "\n";
  }
  return out;
}

std::string render_error_table(const EvalReport& report) {
  std::string out = "Domain";
  for (auto c : kAllErrorCategories) out += "\t" + std::string(to_string(c));
  out += "\n";
  for (const auto& [d, counts] : error_counts(report)) {
    out += std::string(display_name(d));
    for (auto n : counts) out += "\t" + std::to_string(n);
    out += "\n";
  }
  return out;
}

void to_json(json& j, const SimilarityScore& s) {
  j = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

void to_json(json& j, const EvalRecord& r) {
  j = {{"pair_id", r.pair_id},         {"kind", to_string(r.kind)},
       {"domain", to_string(r.domain)}, {"question", r.question},
       {"reference", r.reference},     {"candidate", r.candidate},
       {"runs", r.runs},               {"correct_runs", r.correct_runs},
       {"correct", r.verdict.correct}, {"threshold", r.verdict.threshold},
       {"route", r.route},             {"used_web", r.used_web}};
  j["category"] = r.category ? json(std::string(to_string(*r.category))) : json(nullptr);
}

void to_json(json& j, const EvalReport& r) {
  json domains = json::object();
  for (auto d : kAllDomains) {
    const auto& c = r.per_domain[static_cast<std::size_t>(d)];
    domains[std::string(to_string(d))] = {{"pairs", c.pairs}, {"accuracy", c.accuracy()}};
  }
  json kinds = json::object();
  for (const auto& [k, c] : r.per_kind) kinds[std::string(to_string(k))] = {{"pairs", c.pairs}, {"accuracy", c.accuracy()}};
  json errors = json::object();
  for (const auto& [d, counts] : error_counts(r)) {
    json row = json::object();
    for (auto c : kAllErrorCategories) row[std::string(to_string(c))] = counts[static_cast<std::size_t>(c)];
    errors[std::string(to_string(d))] = row;
  }
  j = {{"config", r.config},
       {"per_domain", domains},
       {"average", r.average},
       {"per_kind", kinds},
       {"overall", {{"pairs", r.overall.pairs}, {"accuracy", r.overall.accuracy()}}},
       {"errors", errors},
       {"records", r.records}};
}

std::string write_records(const EvalReport& report) {
  std::string out;
  for (const auto& r : report.records) out += json(r).dump() + "\n";
  return out;
}

}  // namespace goatrag::eval
