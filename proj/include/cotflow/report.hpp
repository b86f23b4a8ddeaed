// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

/**
 * @file report.hpp
 * @brief Aggregation of analysis directories into one report bundle.
 *
 * Each input directory holds the analysis.json and CSV files written by
 * `cotflow analyze`. The bundle is summary.json plus merged plot-data CSVs:
 *
 *   imitation.csv, adherence.csv, adherence_runs.csv, entropy.csv,
 *   kde_*.csv            as written by the analyses, rows concatenated
 *   layerdiff.csv        one activation analysis; layerdiff_<n>.csv otherwise
 *   activation_summary.csv, activation_hist.csv
 *   improvement.csv      dataset,model,standard_accuracy,cot_accuracy,relative_improvement
 *
 * relative_improvement is a percentage with two decimals, "+inf", or empty
 * when both accuracies are zero.
 */

#include <filesystem>
#include <string>
#include <vector>

#include "cotflow/analysis.hpp"

namespace cotflow::report {

/// Report sections: the four analyses plus "improvement".
const std::vector<std::string>& section_names();

/// Empty `sections` selects every section the inputs can supply. A requested
/// section with no backing analysis throws DataError naming it.
analysis::Output build_report(const std::vector<std::filesystem::path>& analysis_dirs,
                              const std::vector<std::string>& sections = {});

}  // namespace cotflow::report
