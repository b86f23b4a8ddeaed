// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

/**
 * @file model.hpp
 * @brief Shared data model for generation traces.
 *
 * A TraceRecord is one generation episode: the prompt and question that went
 * in, the tokens that came out with their probabilities, and optionally the
 * top-k distribution per step and the per-layer FFN activation counts.
 *
 * Every type here is a plain value. Validation never throws: violations are
 * returned as data so callers can decide between strict and lenient handling.
 */

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cotflow {

enum class PromptKind { cot, standard };

std::string_view to_string(PromptKind kind);
/// Throws std::invalid_argument for anything other than "cot" / "standard".
PromptKind parse_prompt_kind(std::string_view text);

enum class DecodeStrategy { greedy };

struct DecodeParams {
  DecodeStrategy strategy = DecodeStrategy::greedy;
  int64_t max_new_tokens = 300;
  int64_t shots = 4;

  bool operator==(const DecodeParams&) const = default;
};

/// Top-k candidates at one generation step. Both vectors are empty for steps
/// where the producer did not record a distribution.
struct TopkStep {
  std::vector<std::string> tokens;
  std::vector<double> probs;

  bool empty() const { return tokens.empty() && probs.empty(); }
  bool operator==(const TopkStep&) const = default;
};

/// Activated-neuron counts: counts[t * num_layers + l] = A_t^(l).
struct ActivationProfile {
  uint32_t num_layers = 0;
  uint32_t num_steps = 0;
  uint32_t ffn_width = 0;
  std::vector<uint32_t> counts;  // step-major, num_steps x num_layers

  uint32_t at(uint32_t step, uint32_t layer) const { return counts[size_t(step) * num_layers + layer]; }
  bool operator==(const ActivationProfile&) const = default;
};

struct TraceRecord {
  std::string id;
  std::string dataset;
  PromptKind prompt_kind = PromptKind::cot;
  std::string prompt_source_dataset;
  std::string model;
  std::string prompt_text;
  std::string question_text;
  std::string gold_answer;
  std::vector<std::string> generated_tokens;
  std::vector<double> token_probs;
  std::optional<std::vector<TopkStep>> topk;
  std::optional<ActivationProfile> activations;
  std::optional<std::vector<std::string>> answer_space;
  DecodeParams decode;

  /// Concatenation of generated_tokens.
  std::string generated_text() const;

  bool operator==(const TraceRecord&) const = default;
};

struct RunManifest {
  std::string model;
  std::string dataset;
  PromptKind prompt_kind = PromptKind::cot;
  std::string prompt_source_dataset;
  int64_t record_count = 0;
  std::optional<double> accuracy;
  std::string created_at;

  bool operator==(const RunManifest&) const = default;
};

struct Violation {
  std::string path;
  std::string reason;

  bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

/// Returns every invariant violation of the record, in field order. An empty
/// report means the record is valid.
ValidationReport validate_record(const TraceRecord& record);
ValidationReport validate_manifest(const RunManifest& manifest);
ValidationReport validate_profile(const ActivationProfile& profile, std::string_view path = "activations");

/// Relative accuracy improvement of CoT over Standard, in percent.
/// A zero Standard accuracy with non-zero CoT accuracy is the distinguished
/// infinite improvement.
struct Improvement {
  bool infinite = false;
  double percent = 0.0;

  /// "+118.34%", "-3.10%", "0.00%", or "+inf".
  std::string render() const;
};

/// Throws std::invalid_argument when an accuracy is outside [0, 1], and
/// std::domain_error when both accuracies are zero.
Improvement relative_improvement(double standard_acc, double cot_acc);

/// Comparison of a printed relative improvement against recomputation from
/// the printed accuracies. Accuracies and the printed value are decimal
/// strings so their printed precision is known.
struct ImprovementAudit {
  Improvement recomputed;
  std::string printed;
  /// Recomputed value rounded to the printed number of decimals equals it.
  bool matches = false;
  /// Some pair of accuracies that round to the printed ones yields a value
  /// that rounds to the printed improvement.
  bool attainable = false;
  double attainable_low = 0.0;
  double attainable_high = 0.0;
};

/// printed accepts forms like "+59.49%", "67.4", "+inf", "+∞".
ImprovementAudit audit_improvement(std::string_view standard_acc, std::string_view cot_acc,
                                   std::string_view printed);

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cotflow
