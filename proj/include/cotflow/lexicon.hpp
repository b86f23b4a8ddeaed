// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

/**
 * @file lexicon.hpp
 * @brief Keyword imitation: test-point extraction and imitation proportions.
 *
 * Text is normalized into tokens, tokens are matched against a four-category
 * lexicon, and the generation's occurrences are compared by surface form
 * against those of the prompt and of the question.
 */

#include <array>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cotflow/text.hpp"

namespace cotflow::lexicon {

/// Report order. Matching precedence is a separate, fixed order:
/// number > action > time > loc_peo.
enum class Category { time = 0, action = 1, loc_peo = 2, number = 3 };
inline constexpr std::array<Category, 4> kCategories = {Category::time, Category::action, Category::loc_peo,
                                                        Category::number};
std::string_view to_string(Category c);

enum class Source { prompt = 0, question = 1 };
inline constexpr std::array<Source, 2> kSources = {Source::prompt, Source::question};
std::string_view to_string(Source s);

struct Token {
  std::string text;
  text::Span span;  // byte span in the symbol-canonicalized input
};

/// Lowercases, canonicalizes typographic operators, and splits on
/// whitespace and punctuation. Numbers keep their sign (when the sign is not
/// preceded by a word character), thousands separators and decimal part.
/// + - * / = > < are standalone tokens. A possessive or contraction suffix
/// ("'s", "'t") after a letter is its own token. Other punctuation is dropped.
std::vector<Token> normalize_text(std::string_view text);

class TestPointLexicon {
 public:
  std::vector<std::string> time;
  std::vector<std::string> action;
  std::vector<std::string> loc_peo;
  std::string number_pattern;
  std::vector<std::string> number_words;

  /// Parses and validates a lexicon config. Throws DataError naming the
  /// offending list or pattern.
  static TestPointLexicon from_json(std::string_view json_text);
  static TestPointLexicon load(const std::string& path);
  /// The shipped default word lists.
  static const TestPointLexicon& builtin();

  const std::vector<std::string>& words(Category c) const;
  /// Full-token match against the number pattern or the number words.
  bool is_number(std::string_view token) const;

  bool operator==(const TestPointLexicon& other) const;

 private:
  void compile();
  std::regex number_re_;
};

struct Occurrence {
  std::string form;     // surface form; multi-word entries joined by one space
  text::Span span;      // byte span in the canonicalized text
  size_t token_begin = 0;
  size_t token_end = 0;  // exclusive
};

struct CategoryOccurrences {
  std::array<std::vector<Occurrence>, 4> by_category;

  const std::vector<Occurrence>& operator[](Category c) const { return by_category[size_t(c)]; }
  std::vector<Occurrence>& operator[](Category c) { return by_category[size_t(c)]; }
  size_t total() const;
};

/// Left-to-right, longest match. Each token belongs to at most one occurrence.
CategoryOccurrences extract_test_points(std::string_view text, const TestPointLexicon& lexicon);

inline constexpr std::string_view kDenominatorBasis = "generated_occurrences";

struct ImitationCell {
  size_t matched = 0;
  size_t generated = 0;  // denominator
  /// matched / generated; nullopt when the generation has no occurrence.
  std::optional<double> proportion() const;
};

struct ImitationReport {
  std::array<std::array<ImitationCell, 2>, 4> cells;
  std::array<size_t, 4> prompt_occurrences{};
  std::array<size_t, 4> question_occurrences{};

  const ImitationCell& at(Category c, Source s) const { return cells[size_t(c)][size_t(s)]; }
  std::optional<double> proportion(Category c, Source s) const { return at(c, s).proportion(); }
};

ImitationReport imitation_proportions(std::string_view generated, std::string_view prompt, std::string_view question,
                                      const TestPointLexicon& lexicon);

/// Same, reusing pre-extracted occurrences (prompts are shared by every
/// record of a run, so callers extract them once).
ImitationReport imitation_proportions(const CategoryOccurrences& generated, const CategoryOccurrences& prompt,
                                      const CategoryOccurrences& question);

/// Mean of defined proportions, with the number of undefined ones.
struct CellMean {
  double sum = 0.0;
  size_t defined = 0;
  size_t undefined = 0;

  std::optional<double> mean() const;
};

/// Per-run aggregate over record-level reports.
class ImitationAggregate {
 public:
  void add(const ImitationReport& report);
  void merge(const ImitationAggregate& other);
  const CellMean& at(Category c, Source s) const { return cells_[size_t(c)][size_t(s)]; }
  size_t records() const { return records_; }

 private:
  std::array<std::array<CellMean, 2>, 4> cells_{};
  size_t records_ = 0;
};

struct TransferRun {
  std::string prompt_source_dataset;
  std::string target_dataset;
  ImitationAggregate aggregate;
};

/// Cross-dataset grid keyed by (prompt source, target); each row has one
/// cell per (category, origin). Runs sharing a key are merged.
using TransferMatrix = std::map<std::pair<std::string, std::string>, ImitationAggregate>;
TransferMatrix transfer_matrix(const std::vector<TransferRun>& runs);

}  // namespace cotflow::lexicon
