#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace goatrag::text {

// Casefolded maximal runs of letters/digits, in order. ASCII letters are
// lowercased; non-ASCII code points count as letters except for the Latin-1
// punctuation range and the general-punctuation / arrow blocks, which split
// tokens (so "1–3" with an en dash yields ["1", "3"]).
std::vector<std::string> tokenize(std::string_view s);

std::string_view trim(std::string_view s) noexcept;
bool is_blank(std::string_view s) noexcept;

// Collapses every whitespace run to one space and trims the ends.
std::string collapse_whitespace(std::string_view s);

std::string to_lower_ascii(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);

// CRLF and lone CR become LF.
std::string normalize_line_endings(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view s);

// Sentences end at '.', '!' or '?' followed by whitespace or end of text; the
// terminator stays with its sentence. Whitespace inside a sentence is
// collapsed. Text without a terminator is a single sentence.
std::vector<std::string> split_sentences(std::string_view s);
std::string first_sentence(std::string_view s);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view s) noexcept;
std::string hex64(std::uint64_t v);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace goatrag::text
