#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace goatrag {

enum class Domain {
  DiseasePrevention,
  NutritionManagement,
  RearingManagement,
  GoatMilkManagement,
  BasicFarmingKnowledge,
};

inline constexpr std::array<Domain, 5> kAllDomains = {
    Domain::DiseasePrevention, Domain::NutritionManagement, Domain::RearingManagement,
    Domain::GoatMilkManagement, Domain::BasicFarmingKnowledge};

enum class SourceKind { Article, Table, Tree };

inline constexpr std::array<SourceKind, 3> kAllSourceKinds = {SourceKind::Article, SourceKind::Table,
                                                              SourceKind::Tree};

// Novel marks expert-curated questions whose answers lie outside the
// knowledge base; they only appear in the test split.
enum class QAKind { Text, Table, Tree, Novel };

inline constexpr std::array<QAKind, 4> kAllQAKinds = {QAKind::Text, QAKind::Table, QAKind::Tree,
                                                      QAKind::Novel};

std::string_view to_string(Domain d) noexcept;
std::string_view display_name(Domain d) noexcept;
std::string_view to_string(SourceKind k) noexcept;
std::string_view to_string(QAKind k) noexcept;

// Accepts the canonical names plus short aliases ("disease", "nutrition",
// "rearing", "feeding", "milk", "basic"), case-insensitively.
std::optional<Domain> parse_domain(std::string_view s);
std::optional<SourceKind> parse_source_kind(std::string_view s);
std::optional<QAKind> parse_qa_kind(std::string_view s);

// Throwing variants used by loaders; `context` is prepended to the message.
Domain domain_from_string(std::string_view s, std::string_view context = {});
SourceKind source_kind_from_string(std::string_view s, std::string_view context = {});
QAKind qa_kind_from_string(std::string_view s, std::string_view context = {});

}  // namespace goatrag
