// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

/**
 * @file synth.hpp
 * @brief Synthetic CoT / Standard trace pairs with planted ground truth.
 *
 * Construction, not sampling, fixes every recoverable quantity:
 *
 *  - each record's per-layer activation sum is round(mean * T) plus an
 *    integer jitter that cancels across consecutive record pairs, so cohort
 *    layer means equal round(mean * T) / T exactly;
 *  - each CoT generation carries k test-point occurrences per planted
 *    category, of which round(P k) reuse a prompt form and round(Q k) a
 *    question form;
 *  - exactly round(f N) CoT generations close with a terminal answer
 *    statement after a number that is new relative to the question.
 *
 * Randomness (step placement, filler order, probabilities) comes from a
 * seeded mt19937_64 with its own integer-to-range mapping, so output is
 * byte-identical across platforms for a given seed.
 */

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cotflow/model.hpp"

namespace cotflow::synth {

class SpecError : public DataError {
 public:
  using DataError::DataError;
};

struct PlantedImitation {
  double prompt = 0.0;
  double question = 0.0;
};

struct SynthSpec {
  int64_t num_records = 10;
  uint32_t num_steps = 4;
  uint32_t num_layers = 2;
  uint32_t ffn_width = 16;
  uint64_t rng_seed = 0;
  std::string dataset = "gsm8k";
  std::string prompt_source_dataset;  // empty: same as dataset
  std::string model = "synthetic";
  std::string created_at = "1970-01-01T00:00:00Z";
  std::vector<double> planted_cot_means;
  std::vector<double> planted_standard_means;
  /// Integer offset on every layer sum, + for even records and - for odd
  /// ones; an unpaired last record gets none.
  int64_t record_mean_jitter = 0;
  /// Keyed by "time", "action", "loc_peo", "number". Absent categories do not
  /// occur in generations.
  std::map<std::string, PlantedImitation> planted_imitation;
  int occurrences_per_category = 8;
  double planted_adherent_fraction = 0.5;
  std::optional<std::vector<std::string>> answer_space;
  std::optional<double> planted_cot_accuracy;
  std::optional<double> planted_standard_accuracy;
  bool activations = true;

  /// Throws SpecError on unknown fields, wrong types or violated bounds.
  static SynthSpec from_json(std::string_view json_text);
  static SynthSpec load(const std::filesystem::path& path);
  /// Throws SpecError if the spec cannot be realized.
  void check() const;
};

struct CategoryTruth {
  int occurrences = 0;
  int matched_prompt = 0;
  int matched_question = 0;
  double proportion_prompt() const { return occurrences ? double(matched_prompt) / occurrences : 0.0; }
  double proportion_question() const { return occurrences ? double(matched_question) / occurrences : 0.0; }
};

struct GroundTruth {
  int64_t num_records = 0;
  std::vector<double> cot_layer_means;       // realized, round(mean * T) / T
  std::vector<double> standard_layer_means;
  std::vector<double> layer_diff;
  int64_t adherent_count = 0;
  std::map<std::string, CategoryTruth> imitation;  // planted categories only
  /// Largest gap between a planted and a realized proportion is below this.
  double imitation_tolerance = 0.0;
  std::optional<double> cot_accuracy;
  std::optional<double> standard_accuracy;

  std::string to_json() const;
};

struct SynthOutput {
  std::filesystem::path cot_trace;
  std::filesystem::path standard_trace;
  std::filesystem::path ground_truth;
  GroundTruth truth;
};

/// Record-at-a-time generator; synth_traces streams it to disk.
class Generator {
 public:
  explicit Generator(SynthSpec spec);

  RunManifest manifest(PromptKind kind) const;
  TraceRecord cot(int64_t index);
  TraceRecord standard(int64_t index);
  const GroundTruth& truth() const { return truth_; }

 private:
  ActivationProfile profile(const std::vector<double>& means, int64_t index, uint64_t stream) const;
  std::string id(int64_t index) const;

  SynthSpec spec_;
  GroundTruth truth_;
  std::vector<bool> adherent_;
  std::vector<bool> cot_correct_;
  std::vector<bool> standard_correct_;
  std::string cot_prompt_;
  std::string standard_prompt_;
  std::string question_;
};

/// Writes cot.trc, std.trc (with .ctac sidecars) and ground_truth.json.
SynthOutput synth_traces(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace cotflow::synth
