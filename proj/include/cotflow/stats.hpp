// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cotflow::stats {

/// Neumaier compensated summation. Partial sums merge associatively, which
/// keeps parallel folds order-stable to well below 1e-9 relative.
class CompensatedSum {
 public:
  void add(double x);
  void merge(const CompensatedSum& other);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

double mean(std::span<const double> xs);

/// Sample standard deviation (n - 1 denominator). Requires n >= 2.
double sample_sd(std::span<const double> xs);

/// Quantile by linear interpolation between order statistics (the
/// "type 7" definition: h = (n - 1) q). Input need not be sorted.
double quantile(std::span<const double> xs, double q);

/// Same, for already sorted input.
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace cotflow::stats
