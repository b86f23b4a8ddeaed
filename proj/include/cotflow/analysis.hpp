// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

/**
 * @file analysis.hpp
 * @brief Per-trace analyses behind `cotflow analyze`.
 *
 * Every analysis streams its inputs. Results are an analysis.json document
 * plus plot-data CSV files; both depend only on the inputs and settings.
 *
 * CSV schemas:
 *
 *   imitation.csv          prompt_source_dataset,target_dataset,prompt_kind,model,records,category,origin,mean,defined,undefined
 *   adherence.csv          id,dataset,prompt_kind,stage1_entities,stage2_reasoning,stage2_evidence,stage3_final_answer,adherent,correct
 *   adherence_runs.csv     dataset,prompt_source_dataset,prompt_kind,model,records,imitation_count,accuracy
 *   kde_<dataset>_<kind>.csv  grid,density
 *   entropy.csv            id,prompt_kind,correct,entropy
 *   layerdiff.csv          layer,cot_mean,standard_mean,diff
 *   activation_summary.csv dataset,model,cohort,records,mean,p5,p25,p50,p75,p95
 *   activation_hist.csv    dataset,model,cohort,bin,low,high,count
 */

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cotflow/activation.hpp"
#include "cotflow/config.hpp"
#include "cotflow/lexicon.hpp"
#include "cotflow/projection.hpp"
#include "cotflow/structure.hpp"
#include "cotflow/trace_io.hpp"

namespace cotflow::analysis {

enum class Kind { keywords, structure, projection, activation };
std::string_view to_string(Kind k);
/// Throws std::invalid_argument for an unknown name.
Kind parse_kind(std::string_view s);

struct Options {
  lexicon::TestPointLexicon lexicon = lexicon::TestPointLexicon::builtin();
  structure::EntitySpecs specs = structure::EntitySpecs::builtin();
  projection::AnswerOptions answer_options = projection::AnswerOptions::builtin();
  std::optional<double> bandwidth;  // nullopt: Silverman
  size_t grid_size = projection::kDefaultGridSize;
  activation::Weighting weighting = activation::Weighting::per_record;
  bool strict = true;
  nlohmann::ordered_json config_echo = nlohmann::ordered_json::object();

  /// Loads the lexicon and entity spec files the config names.
  static Options from_config(const Config& config);
};

struct Output {
  nlohmann::ordered_json json;
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  std::vector<RecordError> record_errors;                  // lenient mode only
};

/// Keywords, structure and projection take any number of traces, one run
/// each. Activation takes exactly two: the CoT trace, then the Standard one.
/// Throws DataError on bad data and std::invalid_argument on bad arguments.
Output analyze(Kind kind, const std::vector<std::filesystem::path>& traces, const Options& options);

/// Writes `json_name` and every file into dir, creating it if needed.
void write_output(const Output& out, const std::filesystem::path& dir, const std::string& json_name);

/// {"path", "sha256", "sidecar": {...} | null, "manifest": {...}}.
nlohmann::ordered_json describe_input(const std::filesystem::path& trace);

nlohmann::ordered_json manifest_json(const RunManifest& m);

}  // namespace cotflow::analysis
