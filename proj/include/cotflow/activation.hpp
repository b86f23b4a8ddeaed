// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

/**
 * @file activation.hpp
 * @brief FFN activation counts: step totals, means, layer-wise differences
 * and cohort distribution summaries.
 *
 * Cohort aggregation keeps exact integer layer sums grouped by generation
 * length, so merges are associative and commutative without any rounding,
 * and integer-valued planted means come back exactly.
 */

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "cotflow/model.hpp"

namespace cotflow::activation {

/// Number of strictly positive entries.
size_t count_active(std::span<const double> raw);
size_t count_active(std::span<const float> raw);

/// Per-step sums over layers.
std::vector<uint64_t> step_totals(const ActivationProfile& profile);

/// Mean of step_totals. Throws std::invalid_argument when T == 0.
double mean_activation(const ActivationProfile& profile);

/// Per-layer time means of one record.
std::vector<double> record_layer_means(const ActivationProfile& profile);

enum class Weighting {
  per_record,  // each record's time-mean counts once
  token,       // each generated step counts once
};

class LayerMeanAccumulator {
 public:
  explicit LayerMeanAccumulator(Weighting weighting = Weighting::per_record) : weighting_(weighting) {}

  /// Throws DataError when L differs from earlier records or T == 0.
  void add(const ActivationProfile& profile);
  void merge(const LayerMeanAccumulator& other);

  /// Throws std::invalid_argument for an empty cohort.
  std::vector<double> means() const;
  size_t records() const { return records_; }
  uint32_t num_layers() const { return num_layers_; }
  Weighting weighting() const { return weighting_; }

 private:
  struct Group {
    uint64_t records = 0;
    std::vector<uint64_t> sums;  // per layer, over all steps of all records
  };
  Weighting weighting_;
  uint32_t num_layers_ = 0;
  size_t records_ = 0;
  std::map<uint32_t, Group> by_steps_;  // keyed by T
};

std::vector<double> layer_means(const std::vector<ActivationProfile>& profiles,
                                Weighting weighting = Weighting::per_record);

struct LayerDiff {
  std::vector<double> cot;
  std::vector<double> standard;
  std::vector<double> diff;  // cot - standard
  size_t final_third_layers = 0;  // ceil(L / 3)
  double final_third_mean = 0.0;  // mean diff over the last ceil(L / 3) layers
};

/// Throws std::invalid_argument for an empty cohort and DataError for
/// mismatched L.
LayerDiff layer_diff(const LayerMeanAccumulator& cot, const LayerMeanAccumulator& standard);
LayerDiff layer_diff(const std::vector<ActivationProfile>& cot, const std::vector<ActivationProfile>& standard,
                     Weighting weighting = Weighting::per_record);

inline constexpr size_t kHistogramBins = 20;

struct ActivationSummary {
  size_t records = 0;
  /// Mean over records of each record's mean activation.
  double mean = 0.0;
  /// Mean step total at each step, over the records that reach that step.
  std::vector<double> step_totals;
  double p5 = 0.0, p25 = 0.0, p50 = 0.0, p75 = 0.0, p95 = 0.0;
  std::vector<double> bin_edges;  // kHistogramBins + 1 ascending edges
  std::vector<size_t> bin_counts;
};

/// Streaming collector for one cohort.
class DistributionAccumulator {
 public:
  void add(const ActivationProfile& profile);
  /// Throws std::invalid_argument for an empty cohort.
  ActivationSummary summary() const;
  size_t records() const { return record_means_.size(); }

 private:
  std::vector<double> record_means_;
  std::vector<uint64_t> step_sum_;
  std::vector<uint64_t> step_n_;
};

ActivationSummary distribution_summary(const std::vector<ActivationProfile>& profiles);

/// Quantiles and histogram over precomputed per-record means.
ActivationSummary summarize_means(std::vector<double> record_means);

}  // namespace cotflow::activation
