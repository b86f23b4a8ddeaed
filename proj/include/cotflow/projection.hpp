// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

/**
 * @file projection.hpp
 * @brief Answer-phrase probabilities, Gaussian KDE, answer-step entropy and
 * answer extraction.
 *
 * Phrase matching works on detokenized text, so it does not depend on how a
 * tokenizer split "answer is".
 */

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotflow/model.hpp"
#include "cotflow/structure.hpp"

namespace cotflow::projection {

/// Half-open range of token indices.
struct TokenSpan {
  size_t begin = 0;
  size_t end = 0;

  size_t size() const { return end - begin; }
  bool operator==(const TokenSpan&) const = default;
};

class NoAnswerPhrase : public DataError {
 public:
  NoAnswerPhrase() : DataError("no answer phrase") {}
};

struct AnswerPhrase {
  /// From the token holding "answer" through the first sentence terminator
  /// after the phrase or the end of generation, whichever comes first.
  TokenSpan span;
  /// Token after the one that completes "is"; nullopt if generation ends there.
  std::optional<size_t> answer_step;
};

/// Last "answer is" in the generation. Throws NoAnswerPhrase if absent.
AnswerPhrase locate_answer_phrase(const TraceRecord& record);

struct ProbabilitySequence {
  std::vector<std::string> tokens;
  std::vector<double> probs;
};

/// Throws std::out_of_range for an empty span or one past the generation.
ProbabilitySequence sequence_probabilities(const TraceRecord& record, TokenSpan span);

/// Silverman's rule: 0.9 min(sd, IQR / 1.34) n^(-1/5); sd alone when the IQR
/// is zero; floored at 1e-3. Throws std::domain_error("bandwidth undefined")
/// for n < 2 or zero spread.
double silverman_bandwidth(std::span<const double> samples);

inline constexpr size_t kDefaultGridSize = 256;
/// n points i / (n - 1), i = 0 .. n - 1.
std::vector<double> uniform_grid(size_t n = kDefaultGridSize);

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
  size_t n = 0;
};

/// f(x) = 1 / (n h) sum_i K((x - x_i) / h) with the standard normal kernel,
/// no boundary correction. Throws std::invalid_argument for empty samples,
/// samples outside [0, 1], or h <= 0.
DensityCurve kde_gaussian(std::span<const double> samples, double h, std::span<const double> grid);

/// Trapezoidal integral of the curve over its grid.
double trapezoid_mass(const DensityCurve& curve);

/// Option-label canonicalization: strip wrapping punctuation, case-fold,
/// then map aliases ("true" -> "yes").
class AnswerOptions {
 public:
  std::string strip_leading;
  std::string strip_trailing;
  bool case_fold = true;
  std::map<std::string, std::vector<std::string>> aliases;

  static AnswerOptions from_json(std::string_view json_text);
  static const AnswerOptions& builtin();

  std::string canonical(std::string_view label) const;
};

class AnswerSpaceNotCovered : public DataError {
 public:
  explicit AnswerSpaceNotCovered(const std::string& option)
      : DataError("answer space not covered: no top-k token for option '" + option + "'"), option_(option) {}
  const std::string& option() const { return option_; }

 private:
  std::string option_;
};

struct StepDistribution {
  std::vector<std::string> options;
  std::vector<double> probs;      // normalized
  std::vector<double> raw_probs;  // as found in the top-k list
  std::vector<std::string> matched_tokens;
  size_t step = 0;
};

/// Distribution over the closed answer space at the answer-prediction step.
/// Each option takes the most probable top-k token that canonicalizes to it.
/// Throws NoAnswerPhrase, DataError (no top-k at that step) or
/// AnswerSpaceNotCovered.
StepDistribution answer_step_distribution(const TraceRecord& record, const std::vector<std::string>& answer_space,
                                          const AnswerOptions& options = AnswerOptions::builtin());

/// Shannon entropy in nats; 0 ln 0 = 0.
double entropy(std::span<const double> probs);
inline double entropy(const StepDistribution& d) { return entropy(d.probs); }

struct AnswerExtraction {
  std::string predicted;
  bool correct = false;
  std::string pattern_used;
  bool unparseable = false;
};

/// Applies the answer-kind pattern to the text after the last "answer is",
/// falling back to the last match anywhere in the generation (free text has
/// no fallback). Prediction and gold are canonicalized before comparison.
AnswerExtraction extract_answer(std::string_view generated, std::string_view gold, structure::AnswerKind kind,
                                const AnswerOptions& options = AnswerOptions::builtin());
AnswerExtraction extract_answer(const TraceRecord& record, const structure::EntitySpec& spec,
                                const AnswerOptions& options = AnswerOptions::builtin());

/// Fraction correct. Throws std::invalid_argument for an empty list.
double accuracy(const std::vector<AnswerExtraction>& extractions);

}  // namespace cotflow::projection
