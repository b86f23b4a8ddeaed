// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include <doctest.h>

#include <algorithm>
#include <random>

#include "cotflow/activation.hpp"
#include "helpers.hpp"

using namespace cotflow;
using namespace cotflow::activation;
using testing::profile;

namespace {

// Profile whose records have constant per-layer counts equal to `means`.
ActivationProfile flat(const std::vector<uint32_t>& means, uint32_t steps = 2) {
  std::vector<uint32_t> c;
  for (uint32_t t = 0; t < steps; ++t) c.insert(c.end(), means.begin(), means.end());
  return profile(steps, uint32_t(means.size()), 100, c);
}

ActivationProfile random_profile(std::mt19937_64& rng, uint32_t layers) {
  const uint32_t steps = 1 + uint32_t(rng() % 6);
  std::vector<uint32_t> c(size_t(steps) * layers);
  for (auto& x : c) x = uint32_t(rng() % 101);
  return profile(steps, layers, 100, c);
}

}  // namespace

TEST_CASE("active-neuron counting uses a strict inequality") {
  const std::vector<double> v{0.5, -0.2, 0.0, 1.3};
  CHECK(count_active(v) == 2);
  const std::vector<float> neg(8, -1.0f), pos(16, 0.1f);
  CHECK(count_active(neg) == 0);
  CHECK(count_active(pos) == 16);
}

TEST_CASE("step totals and mean activation") {
  const auto p = profile(2, 2, 50, {10, 20, 30, 40});
  CHECK(step_totals(p) == std::vector<uint64_t>{30, 70});
  CHECK(mean_activation(p) == 50.0);
  const auto single = profile(3, 1, 50, {4, 5, 6});
  CHECK(step_totals(single) == std::vector<uint64_t>{4, 5, 6});
  CHECK(step_totals(profile(2, 3, 5, std::vector<uint32_t>(6, 0))) == std::vector<uint64_t>{0, 0});
  CHECK(mean_activation(profile(3, 2, 9, {3, 4, 3, 4, 3, 4})) == 7.0);
}

TEST_CASE("layer means") {
  CHECK(record_layer_means(profile(2, 2, 9, {4, 6, 6, 2})) == std::vector<double>{5, 4});
  CHECK(layer_means({flat({5, 4}), flat({7, 8})}) == std::vector<double>{6, 6});
  // token weighting counts every step once
  const auto long_rec = flat({10}, 3), short_rec = flat({2}, 1);
  CHECK(layer_means({long_rec, short_rec}, Weighting::per_record) == std::vector<double>{6});
  CHECK(layer_means({long_rec, short_rec}, Weighting::token) == std::vector<double>{8});
  CHECK_THROWS_AS(layer_means({}), std::invalid_argument);
  CHECK_THROWS_AS(layer_means({flat({1, 2}), flat({1})}), DataError);
}

TEST_CASE("layer differences") {
  const auto d = layer_diff({flat({5, 3})}, {flat({7, 1})});
  CHECK(d.diff == std::vector<double>{-2, 2});
  CHECK(d.final_third_layers == 1);
  CHECK(d.final_third_mean == 2.0);
  const auto same = layer_diff({flat({5, 3, 1})}, {flat({5, 3, 1})});
  CHECK(same.diff == std::vector<double>{0, 0, 0});
  const auto four = layer_diff({flat({1, 1, 4, 6})}, {flat({1, 1, 1, 1})});
  CHECK(four.final_third_layers == 2);
  CHECK(four.final_third_mean == 4.0);
}

TEST_CASE("distribution summaries") {
  const auto s = distribution_summary({flat({10}), flat({20}), flat({30})});
  CHECK(s.records == 3);
  CHECK(s.p50 == 20.0);
  CHECK(s.mean == 20.0);
  CHECK(s.bin_counts.size() == kHistogramBins);
  CHECK(s.bin_edges.size() == kHistogramBins + 1);
  size_t total = 0;
  for (auto c : s.bin_counts) total += c;
  CHECK(total == 3);

  const auto one = distribution_summary({flat({7, 9})});
  CHECK(one.p5 == 16.0);
  CHECK(one.p95 == 16.0);
  CHECK(one.p50 == one.mean);

  const auto steps = distribution_summary({flat({1}, 3), flat({3}, 1)});
  CHECK(steps.step_totals == std::vector<double>{2, 1, 1});
  CHECK_THROWS_AS(distribution_summary({}), std::invalid_argument);
}

TEST_CASE("property: layer differences are antisymmetric and order-free") {
  std::mt19937_64 rng(21);
  for (int iter = 0; iter < 200; ++iter) {
    const uint32_t layers = 1 + uint32_t(rng() % 6);
    std::vector<ActivationProfile> a, b;
    for (size_t i = 0, n = 1 + rng() % 8; i < n; ++i) a.push_back(random_profile(rng, layers));
    for (size_t i = 0, n = 1 + rng() % 8; i < n; ++i) b.push_back(random_profile(rng, layers));
    for (auto w : {Weighting::per_record, Weighting::token}) {
      const auto ab = layer_diff(a, b, w), ba = layer_diff(b, a, w);
      for (size_t l = 0; l < layers; ++l) REQUIRE(ab.diff[l] == -ba.diff[l]);
      auto shuffled = a;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      REQUIRE(layer_means(shuffled, w) == layer_means(a, w));
    }
    // merging partial accumulators equals one pass
    LayerMeanAccumulator whole, left, right;
    for (size_t i = 0; i < a.size(); ++i) {
      whole.add(a[i]);
      (i % 2 ? left : right).add(a[i]);
    }
    left.merge(right);
    REQUIRE(left.means() == whole.means());
  }
}
