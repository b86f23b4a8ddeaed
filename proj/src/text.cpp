// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/text.hpp"

#include <array>
#include <utility>

namespace cotflow::text {

namespace {

constexpr std::array<std::pair<std::string_view, char>, 7> kSymbolMap{{
    {"\xC3\x97", '*'},          // ×
    {"\xC3\xB7", '/'},          // ÷
    {"\xE2\x88\x92", '-'},      // − U+2212
    {"\xE2\x80\x98", '\''},     // ‘
    {"\xE2\x80\x99", '\''},     // ’
    {"\xE2\x80\x9C", '"'},      // “
    {"\xE2\x80\x9D", '"'},      // ”
}};

bool is_closing(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

}  // namespace

std::string canonicalize_symbols(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (size_t i = 0; i < in.size();) {
    bool mapped = false;
    if (static_cast<unsigned char>(in[i]) >= 0x80) {
      for (const auto& [from, to] : kSymbolMap) {
        if (in.substr(i, from.size()) == from) {
          out.push_back(to);
          i += from.size();
          mapped = true;
          break;
        }
      }
    }
    if (!mapped) out.push_back(in[i++]);
  }
  return out;
}

std::string ascii_lower(std::string_view in) {
  std::string out(in);
  for (char& c : out) {
    if (is_upper(c)) c = char(c - 'A' + 'a');
  }
  return out;
}

bool is_sentence_terminator(std::string_view text, size_t pos) {
  const char c = text[pos];
  if (c != '.' && c != '!' && c != '?') return false;
  size_t next = pos + 1;
  while (next < text.size() && is_closing(text[next])) ++next;
  return next >= text.size() || is_space(text[next]);
}

std::vector<Span> split_sentences(std::string_view text) {
  std::vector<Span> out;
  size_t start = 0;
  auto push = [&](size_t begin, size_t end) {
    while (begin < end && is_space(text[begin])) ++begin;
    size_t stop = end;
    while (stop > begin && is_space(text[stop - 1])) --stop;
    if (stop > begin) out.push_back({begin, stop});
  };
  for (size_t i = 0; i < text.size(); ++i) {
    if (is_sentence_terminator(text, i)) {
      size_t end = i + 1;
      while (end < text.size() && is_closing(text[end])) ++end;
      push(start, end);
      start = end;
      i = end - 1;
    }
  }
  push(start, text.size());
  return out;
}

std::optional<Span> find_last_phrase(std::string_view text, std::string_view phrase) {
  std::vector<std::string> words;
  {
    size_t i = 0;
    while (i < phrase.size()) {
      while (i < phrase.size() && phrase[i] == ' ') ++i;
      size_t j = i;
      while (j < phrase.size() && phrase[j] != ' ') ++j;
      if (j > i) words.push_back(ascii_lower(phrase.substr(i, j - i)));
      i = j;
    }
  }
  if (words.empty()) return std::nullopt;

  auto lower_at = [&](size_t i) { return is_upper(text[i]) ? char(text[i] - 'A' + 'a') : text[i]; };
  auto match_word = [&](size_t pos, const std::string& w) {
    if (pos + w.size() > text.size()) return false;
    for (size_t k = 0; k < w.size(); ++k) {
      if (lower_at(pos + k) != w[k]) return false;
    }
    return true;
  };

  std::optional<Span> last;
  for (size_t start = 0; start < text.size(); ++start) {
    if (start > 0 && is_word_char(text[start - 1])) continue;
    size_t pos = start;
    bool ok = true;
    for (size_t w = 0; w < words.size() && ok; ++w) {
      if (w > 0) {
        size_t ws = pos;
        while (ws < text.size() && is_space(text[ws])) ++ws;
        if (ws == pos) {
          ok = false;
          break;
        }
        pos = ws;
      }
      if (!match_word(pos, words[w])) {
        ok = false;
        break;
      }
      pos += words[w].size();
    }
    if (!ok) continue;
    if (pos < text.size() && is_word_char(text[pos])) continue;
    last = Span{start, pos};
  }
  return last;
}

std::string trim(std::string_view in) {
  size_t b = 0, e = in.size();
  while (b < e && is_space(in[b])) ++b;
  while (e > b && is_space(in[e - 1])) --e;
  return std::string(in.substr(b, e - b));
}

size_t scan_number(std::string_view s, size_t i) {
  while (i < s.size() && is_digit(s[i])) ++i;
  while (i + 3 < s.size() && s[i] == ',' && is_digit(s[i + 1]) && is_digit(s[i + 2]) && is_digit(s[i + 3]) &&
         (i + 4 >= s.size() || !is_digit(s[i + 4]))) {
    i += 4;
  }
  if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
  }
  return i;
}

}  // namespace cotflow::text
