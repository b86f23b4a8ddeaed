// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/activation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cotflow/stats.hpp"

namespace cotflow::activation {

size_t count_active(std::span<const double> raw) {
  return size_t(std::count_if(raw.begin(), raw.end(), [](double x) { return x > 0.0; }));
}

size_t count_active(std::span<const float> raw) {
  return size_t(std::count_if(raw.begin(), raw.end(), [](float x) { return x > 0.0f; }));
}

std::vector<uint64_t> step_totals(const ActivationProfile& p) {
  std::vector<uint64_t> out(p.num_steps, 0);
  for (uint32_t t = 0; t < p.num_steps; ++t) {
    for (uint32_t l = 0; l < p.num_layers; ++l) out[t] += p.at(t, l);
  }
  return out;
}

double mean_activation(const ActivationProfile& p) {
  if (p.num_steps == 0) throw std::invalid_argument("mean activation needs T >= 1");
  uint64_t total = 0;
  for (uint32_t c : p.counts) total += c;
  return double(total) / double(p.num_steps);
}

std::vector<double> record_layer_means(const ActivationProfile& p) {
  if (p.num_steps == 0) throw std::invalid_argument("layer means need T >= 1");
  std::vector<uint64_t> sums(p.num_layers, 0);
  for (uint32_t t = 0; t < p.num_steps; ++t) {
    for (uint32_t l = 0; l < p.num_layers; ++l) sums[l] += p.at(t, l);
  }
  std::vector<double> out(p.num_layers);
  for (uint32_t l = 0; l < p.num_layers; ++l) out[l] = double(sums[l]) / double(p.num_steps);
  return out;
}

// ---------------------------------------------------------------- cohorts

void LayerMeanAccumulator::add(const ActivationProfile& p) {
  if (p.num_steps == 0) throw DataError("activation profile with T = 0");
  if (records_ == 0) {
    num_layers_ = p.num_layers;
  } else if (p.num_layers != num_layers_) {
    throw DataError("layer count mismatch: " + std::to_string(p.num_layers) + " vs " + std::to_string(num_layers_));
  }
  auto& g = by_steps_[p.num_steps];
  if (g.sums.empty()) g.sums.assign(num_layers_, 0);
  for (uint32_t t = 0; t < p.num_steps; ++t) {
    for (uint32_t l = 0; l < num_layers_; ++l) g.sums[l] += p.at(t, l);
  }
  ++g.records;
  ++records_;
}

void LayerMeanAccumulator::merge(const LayerMeanAccumulator& other) {
  if (other.records_ == 0) return;
  if (records_ == 0) {
    num_layers_ = other.num_layers_;
  } else if (other.num_layers_ != num_layers_) {
    throw DataError("layer count mismatch in merge");
  }
  for (const auto& [steps, og] : other.by_steps_) {
    auto& g = by_steps_[steps];
    if (g.sums.empty()) g.sums.assign(num_layers_, 0);
    for (uint32_t l = 0; l < num_layers_; ++l) g.sums[l] += og.sums[l];
    g.records += og.records;
  }
  records_ += other.records_;
}

std::vector<double> LayerMeanAccumulator::means() const {
  if (records_ == 0) throw std::invalid_argument("layer means of an empty cohort");
  std::vector<double> out(num_layers_);
  if (weighting_ == Weighting::token) {
    uint64_t steps = 0;
    for (const auto& [t, g] : by_steps_) steps += uint64_t(t) * g.records;
    for (uint32_t l = 0; l < num_layers_; ++l) {
      uint64_t s = 0;
      for (const auto& [t, g] : by_steps_) s += g.sums[l];
      out[l] = double(s) / double(steps);
    }
    return out;
  }
  if (by_steps_.size() == 1) {
    // one rounding: sum / (T * records)
    const auto& [t, g] = *by_steps_.begin();
    for (uint32_t l = 0; l < num_layers_; ++l) out[l] = double(g.sums[l]) / (double(t) * double(g.records));
    return out;
  }
  for (uint32_t l = 0; l < num_layers_; ++l) {
    stats::CompensatedSum s;
    for (const auto& [t, g] : by_steps_) s.add(double(g.sums[l]) / double(t));
    out[l] = s.value() / double(records_);
  }
  return out;
}

std::vector<double> layer_means(const std::vector<ActivationProfile>& profiles, Weighting weighting) {
  LayerMeanAccumulator acc(weighting);
  for (const auto& p : profiles) acc.add(p);
  return acc.means();
}

LayerDiff layer_diff(const LayerMeanAccumulator& cot, const LayerMeanAccumulator& standard) {
  if (cot.records() == 0 || standard.records() == 0) throw std::invalid_argument("layer diff of an empty cohort");
  if (cot.num_layers() != standard.num_layers()) throw DataError("layer count mismatch between cohorts");
  LayerDiff d;
  d.cot = cot.means();
  d.standard = standard.means();
  d.diff.resize(d.cot.size());
  for (size_t l = 0; l < d.diff.size(); ++l) d.diff[l] = d.cot[l] - d.standard[l];
  const size_t L = d.diff.size();
  d.final_third_layers = (L + 2) / 3;
  if (d.final_third_layers > 0) {
    stats::CompensatedSum s;
    for (size_t l = L - d.final_third_layers; l < L; ++l) s.add(d.diff[l]);
    d.final_third_mean = s.value() / double(d.final_third_layers);
  }
  return d;
}

LayerDiff layer_diff(const std::vector<ActivationProfile>& cot, const std::vector<ActivationProfile>& standard,
                     Weighting weighting) {
  LayerMeanAccumulator a(weighting), b(weighting);
  for (const auto& p : cot) a.add(p);
  for (const auto& p : standard) b.add(p);
  return layer_diff(a, b);
}

// ---------------------------------------------------------------- summaries

void DistributionAccumulator::add(const ActivationProfile& p) {
  record_means_.push_back(mean_activation(p));
  if (step_sum_.size() < p.num_steps) {
    step_sum_.resize(p.num_steps, 0);
    step_n_.resize(p.num_steps, 0);
  }
  const auto totals = step_totals(p);
  for (uint32_t t = 0; t < p.num_steps; ++t) {
    step_sum_[t] += totals[t];
    ++step_n_[t];
  }
}

ActivationSummary DistributionAccumulator::summary() const {
  auto s = summarize_means(record_means_);
  s.step_totals.resize(step_sum_.size());
  for (size_t t = 0; t < step_sum_.size(); ++t) s.step_totals[t] = double(step_sum_[t]) / double(step_n_[t]);
  return s;
}

ActivationSummary summarize_means(std::vector<double> means) {
  if (means.empty()) throw std::invalid_argument("distribution summary of an empty cohort");
  ActivationSummary s;
  s.records = means.size();
  s.mean = stats::mean(means);
  std::sort(means.begin(), means.end());
  s.p5 = stats::quantile_sorted(means, 0.05);
  s.p25 = stats::quantile_sorted(means, 0.25);
  s.p50 = stats::quantile_sorted(means, 0.50);
  s.p75 = stats::quantile_sorted(means, 0.75);
  s.p95 = stats::quantile_sorted(means, 0.95);

  double lo = means.front(), hi = means.back();
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  s.bin_edges.resize(kHistogramBins + 1);
  for (size_t i = 0; i <= kHistogramBins; ++i) s.bin_edges[i] = lo + (hi - lo) * double(i) / double(kHistogramBins);
  s.bin_edges.back() = hi;
  s.bin_counts.assign(kHistogramBins, 0);
  for (double m : means) {
    auto bin = size_t((m - lo) / (hi - lo) * double(kHistogramBins));
    s.bin_counts[std::min(bin, kHistogramBins - 1)]++;
  }
  return s;
}

ActivationSummary distribution_summary(const std::vector<ActivationProfile>& profiles) {
  DistributionAccumulator acc;
  for (const auto& p : profiles) acc.add(p);
  return acc.summary();
}

}  // namespace cotflow::activation
