#include "goatrag/domain.hpp"

#include <algorithm>
#include <cctype>

#include "goatrag/error.hpp"

namespace goatrag {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Lowercase with separators removed, so "disease_prevention" and
// "Disease Prevention" compare equal.
std::string squash(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string prefixed(std::string_view context, std::string msg) {
  if (context.empty()) return msg;
  return std::string(context) + ": " + msg;
}

}  // namespace

std::string_view to_string(Domain d) noexcept {
  switch (d) {
    case Domain::DiseasePrevention: return "DiseasePrevention";
    case Domain::NutritionManagement: return "NutritionManagement";
    case Domain::RearingManagement: return "RearingManagement";
    case Domain::GoatMilkManagement: return "GoatMilkManagement";
    case Domain::BasicFarmingKnowledge: return "BasicFarmingKnowledge";
  }
  return "";
}

std::string_view display_name(Domain d) noexcept {
  switch (d) {
    case Domain::DiseasePrevention: return "Disease Prevention and Treatment";
    case Domain::NutritionManagement: return "Nutrition Management";
    case Domain::RearingManagement: return "Rearing Management";
    case Domain::GoatMilkManagement: return "Goat Milk Management";
    case Domain::BasicFarmingKnowledge: return "Basic Farming Knowledge";
  }
  return "";
}

std::string_view to_string(SourceKind k) noexcept {
  switch (k) {
    case SourceKind::Article: return "article";
    case SourceKind::Table: return "table";
    case SourceKind::Tree: return "tree";
  }
  return "";
}

std::string_view to_string(QAKind k) noexcept {
  switch (k) {
    case QAKind::Text: return "text";
    case QAKind::Table: return "table";
    case QAKind::Tree: return "tree";
    case QAKind::Novel: return "novel";
  }
  return "";
}

std::optional<Domain> parse_domain(std::string_view s) {
  const std::string l = squash(s);
  for (Domain d : kAllDomains) {
    if (l == squash(to_string(d)) || l == squash(display_name(d))) return d;
  }
  if (l == "disease" || l == "health") return Domain::DiseasePrevention;
  if (l == "nutrition") return Domain::NutritionManagement;
  if (l == "rearing" || l == "feeding") return Domain::RearingManagement;
  if (l == "milk" || l == "goatmilk") return Domain::GoatMilkManagement;
  if (l == "basic" || l == "basicfarming") return Domain::BasicFarmingKnowledge;
  return std::nullopt;
}

std::optional<SourceKind> parse_source_kind(std::string_view s) {
  const std::string l = lower(s);
  for (SourceKind k : kAllSourceKinds) {
    if (l == to_string(k)) return k;
  }
  if (l == "text") return SourceKind::Article;
  return std::nullopt;
}

std::optional<QAKind> parse_qa_kind(std::string_view s) {
  const std::string l = lower(s);
  for (QAKind k : kAllQAKinds) {
    if (l == to_string(k)) return k;
  }
  if (l == "new") return QAKind::Novel;
  return std::nullopt;
}

Domain domain_from_string(std::string_view s, std::string_view context) {
  if (auto d = parse_domain(s)) return *d;
  throw Error(ErrorCode::FormatError, prefixed(context, "unknown domain '" + std::string(s) + "'"));
}

SourceKind source_kind_from_string(std::string_view s, std::string_view context) {
  if (auto k = parse_source_kind(s)) return *k;
  throw Error(ErrorCode::FormatError, prefixed(context, "unknown kind '" + std::string(s) + "'"));
}

QAKind qa_kind_from_string(std::string_view s, std::string_view context) {
  if (auto k = parse_qa_kind(s)) return *k;
  throw Error(ErrorCode::FormatError,
              prefixed(context, "unknown Q&A kind '" + std::string(s) + "'"));
}

}  // namespace goatrag
