// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Byte-level text helpers shared by the lexicon, structure and projection
// modules. All offsets are byte offsets into the string passed in.
namespace cotflow::text {

/// Maps typographic operators and quotes onto ASCII: × -> *, ÷ -> /,
/// U+2212 -> -, curly single quotes -> ', curly double quotes -> ".
std::string canonicalize_symbols(std::string_view in);

std::string ascii_lower(std::string_view in);

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
/// Letters, digits and any non-ASCII byte (UTF-8 continuation of a letter).
inline bool is_word_char(char c) { return is_alpha(c) || is_digit(c) || static_cast<unsigned char>(c) >= 0x80; }

struct Span {
  size_t begin = 0;
  size_t end = 0;

  size_t size() const { return end - begin; }
  bool contains(size_t pos) const { return pos >= begin && pos < end; }
  bool operator==(const Span&) const = default;
};

/// True if text[pos] ends a sentence: one of . ! ? followed (after optional
/// closing quotes or brackets) by whitespace or end of text.
bool is_sentence_terminator(std::string_view text, size_t pos);

/// Sentences are maximal segments ending in a terminator or at end of text.
/// Leading whitespace is trimmed; empty segments are dropped.
std::vector<Span> split_sentences(std::string_view text);

/// Last case-insensitive occurrence of a space-separated phrase, matching any
/// run of whitespace between its words, bounded by non-word characters.
std::optional<Span> find_last_phrase(std::string_view text, std::string_view phrase);

std::string trim(std::string_view in);

/// End of the unsigned number literal whose first digit is text[pos]:
/// digits, then ",ddd" groups, then an optional ".d+" part.
size_t scan_number(std::string_view text, size_t pos);

}  // namespace cotflow::text
