/*
 * Copyright 2026 The causalrx Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "causalrx/effects/binning.hpp"
#include "causalrx/effects/effects_io.hpp"
#include "causalrx/synth/scm.hpp"
#include "support.hpp"

namespace causalrx::effects {
namespace {

BinaryDataset from_columns(const std::vector<std::vector<int>>& cols) {
  BinaryDataset d(cols[0].size(), cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t r = 0; r < cols[c].size(); ++r)
      if (cols[c][r]) d.set(r, c);
  return d;
}

EffectMatrix single_row(std::vector<double> values) {
  EffectMatrix m{Table(1, values.size()), Table(0, values.size())};
  m.dm.values = std::move(values);
  return m;
}

std::vector<std::size_t> histogram(const EdgeTypeMap& types) {
  std::vector<std::size_t> h(types.relations, 0);
  for (int t : types.dm.values) ++h[static_cast<std::size_t>(t)];
  for (int t : types.pm.values) ++h[static_cast<std::size_t>(t)];
  return h;
}

TEST(EstimateAte, OutcomeEqualToTreatmentUsesSmoothedRates) {
  std::vector<int> t(100, 0);
  std::fill(t.begin(), t.begin() + 50, 1);
  const auto d = from_columns({t, t});
  EXPECT_NEAR(estimate_ate(d, 0, 1, {}), 51.0 / 52.0 - 1.0 / 52.0, 1e-15);
}

TEST(EstimateAte, NeverCoOccurringIsExactlyZero) {
  const auto d = from_columns({{1, 1, 0, 0}, {0, 0, 1, 1}, {1, 0, 1, 0}});
  EXPECT_EQ(estimate_ate(d, 0, 1, {}), 0.0);
  const std::vector<int> z{2};
  EXPECT_EQ(estimate_ate(d, 0, 1, z), 0.0);
}

TEST(EstimateAte, HandComputedStratification) {
  // columns: T, Y, Z over eight rows.
  const std::vector<int> T{1, 1, 0, 0, 1, 0, 0, 0};
  const std::vector<int> Y{1, 0, 0, 1, 1, 1, 0, 0};
  const std::vector<int> Z{0, 0, 0, 0, 1, 1, 1, 1};
  const auto d = from_columns({T, Y, Z});
  // z = 0: treated (1,0) -> 2/4, untreated (0,1) -> 2/4, weight 4/8
  // z = 1: treated (1) -> 2/3, untreated (1,0,0) -> 2/5, weight 4/8
  const double expected = 0.5 * (2.0 / 4 - 2.0 / 4) + 0.5 * (2.0 / 3 - 2.0 / 5);
  EXPECT_NEAR(estimate_ate(d, 0, 1, {2}), expected, 1e-15);
  // unadjusted: treated 2 of 3 -> 3/5, untreated 2 of 5 -> 3/7
  EXPECT_NEAR(risk_difference(d, 0, 1), 3.0 / 5 - 3.0 / 7, 1e-15);
}

TEST(EstimateAte, RejectsOverlappingAdjustmentSets) {
  const auto d = from_columns({{1, 0}, {1, 1}, {0, 1}});
  EXPECT_THROW(estimate_ate(d, 0, 1, {0}), UsageError);
  EXPECT_THROW(estimate_ate(d, 0, 1, {1}), UsageError);
  EXPECT_THROW(estimate_ate(d, 0, 0, {}), UsageError);
}

TEST(EstimateAte, RowPermutationInvariant) {
  std::mt19937_64 rng(4);
  BinaryDataset d(500, 4);
  for (std::size_t r = 0; r < 500; ++r)
    for (std::size_t c = 0; c < 4; ++c)
      if (rng() % 3 == 0) d.set(r, c);
  std::vector<std::size_t> perm(500);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::vector<int> z{2, 3};
  EXPECT_EQ(estimate_ate(d, 0, 1, z), estimate_ate(d.permute_rows(perm), 0, 1, z));
}

TEST(EstimateAte, ConfoundedTripleRecoversTheInterventionalEffect) {
  const auto spec = synth::load_spec(std::filesystem::path(CAUSALRX_DATA_DIR) / "confounded_triple.json");
  const auto data = discovery::build_dataset(synth::synth_generate(spec));
  const double truth = synth::exact_ate(spec, 1, 2);
  const double adjusted = estimate_ate(data, 1, 2, {0});
  const double naive = risk_difference(data, 1, 2);
  EXPECT_NEAR(adjusted, truth, 0.05);
  EXPECT_GT(std::abs(naive - truth), std::abs(adjusted - truth));
}

TEST(BackdoorSet, ParentsOfTheTreatment) {
  const EntityLayout L{3, 1, 1};
  discovery::CausalGraph g(5);
  g.add_edge(0, 1);
  g.add_edge(3, 1);
  g.add_edge(1, 4);
  const BinaryDataset d(10, 5);
  EXPECT_EQ(backdoor_set(g, L, d, 1, 4), (std::vector<int>{0, 3}));
  EXPECT_TRUE(backdoor_set(g, L, d, 2, 4).empty());
  EXPECT_THROW(backdoor_set(g, L, d, 4, 4), UsageError);
  EXPECT_THROW(backdoor_set(g, L, d, 1, 0), UsageError);
}

TEST(BackdoorSet, CapsAtThreeByPmiWithTheOutcome) {
  // d0..d4 parents of d5; outcome m0 = column 6.
  const EntityLayout L{6, 0, 1};
  std::mt19937_64 rng(2);
  BinaryDataset d(2000, 7);
  for (std::size_t r = 0; r < 2000; ++r) {
    std::array<int, 5> z{};
    for (std::size_t k = 0; k < 5; ++k)
      if ((z[k] = static_cast<int>(rng() % 2))) d.set(r, k);
    if (rng() % 2) d.set(r, 5);
    // outcome tied strongly to d1 and d3, weakly to d4
    const double p = 0.1 + 0.35 * z[1] + 0.35 * z[3] + 0.15 * z[4];
    if (static_cast<double>(rng() % 10000) / 10000.0 < p) d.set(r, 6);
  }
  discovery::CausalGraph g(7);
  for (int p = 0; p < 5; ++p) g.add_edge(p, 5);
  std::vector<std::pair<double, int>> ranked;
  for (int p = 0; p < 5; ++p) {
    const double n = 2000, na = static_cast<double>(d.ones(static_cast<std::size_t>(p))),
                 nb = static_cast<double>(d.ones(6)), nab = static_cast<double>(d.co_count(static_cast<std::size_t>(p), 6));
    ranked.emplace_back(-std::abs(std::log(nab * n / (na * nb))), p);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<int> expected{ranked[0].second, ranked[1].second, ranked[2].second};
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(backdoor_set(g, L, d, 5, 6), expected);
  EXPECT_EQ(expected, (std::vector<int>{1, 3, 4}));
}

TEST(EffectMatrices, ShapesAndRange) {
  auto spec = synth::load_spec(std::filesystem::path(CAUSALRX_DATA_DIR) / "benchmark_scm.json");
  spec.patients = 150;
  const auto cohort = synth::synth_generate(spec);
  const auto data = discovery::build_dataset(cohort);
  const auto layout = cohort.layout();
  const auto g = discovery::greedy_search(data);
  const auto m = build_effect_matrices(g, data, layout);
  EXPECT_EQ(m.dm.rows, layout.n_diseases);
  EXPECT_EQ(m.dm.cols, layout.n_medications);
  EXPECT_EQ(m.pm.rows, layout.n_procedures);
  for (double v : m.dm.values) EXPECT_TRUE(v >= -1 && v <= 1);
  const auto co = cooccurrence_matrices(data, layout);
  for (double v : co.pm.values) EXPECT_TRUE(v >= 0 && v <= 1);
  EXPECT_THROW(build_effect_matrices(discovery::CausalGraph(3), data, layout), UsageError);
}

TEST(Cooccurrence, ConditionalVisitRates) {
  const EntityLayout L{1, 0, 2};
  const auto d = from_columns({{1, 1, 1, 0}, {1, 0, 0, 1}, {1, 1, 1, 1}});
  const auto co = cooccurrence_matrices(d, L);
  EXPECT_DOUBLE_EQ(co.dm(0, 0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(co.dm(0, 1), 1.0);
}

TEST(BinEffects, TenDistinctValuesFiveTypes) {
  const auto types = bin_effects(single_row({0.9, 0.1, 0.5, 0.3, 0.7, 0.2, 0.4, 0.6, 0.8, 0.0}), 5);
  EXPECT_EQ(histogram(types), (std::vector<std::size_t>{2, 2, 2, 2, 2}));
  EXPECT_EQ(types.dm(0, 9), 0);
  EXPECT_EQ(types.dm(0, 0), 4);
  EXPECT_EQ(types.boundaries.size(), 4u);
}

TEST(BinEffects, ConstantValuesShareOneType) {
  const auto types = bin_effects(single_row(std::vector<double>(7, 0.25)), 5);
  EXPECT_TRUE(types.boundaries.empty());
  for (int t : types.dm.values) EXPECT_EQ(t, 0);
}

TEST(BinEffects, DuplicatesCollapseAndDistinctTailGetsSplit) {
  const auto types = bin_effects(single_row({0, 0, 0, 0, 0, 0, 0, 0, 1, 2}), 5);
  EXPECT_EQ(types.boundaries, (std::vector<double>{0, 1}));
  EXPECT_EQ(types.dm(0, 0), 0);
  EXPECT_EQ(types.dm(0, 8), 1);
  EXPECT_EQ(types.dm(0, 9), 2);
}

TEST(BinEffects, BoundaryValuesFallIntoTheLowerBin) {
  EdgeTypeMap m;
  m.boundaries = {0.1, 0.5};
  EXPECT_EQ(m.type_of(0.1), 0);
  EXPECT_EQ(m.type_of(0.10001), 1);
  EXPECT_EQ(m.type_of(0.5), 1);
  EXPECT_EQ(m.type_of(0.9), 2);
}

TEST(BinEffects, DistinctValuesGiveNearEqualBins) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t n : {5u, 12u, 37u, 240u}) {
    for (std::size_t r : {2u, 3u, 5u, 7u}) {
      std::vector<double> v(n);
      for (auto& x : v) x = u(rng);
      const auto h = histogram(bin_effects(single_row(v), r));
      const auto [lo, hi] = std::minmax_element(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(std::min(n, r)));
      EXPECT_LE(*hi - *lo, 1u) << n << " values, " << r << " types";
      for (std::size_t k = 0; k < std::min(n, r); ++k) EXPECT_GT(h[k], 0u);
    }
  }
}

TEST(BinEffects, TypesAreMonotoneInValue) {
  std::mt19937_64 rng(12);
  std::vector<double> v(60);
  for (auto& x : v) x = static_cast<double>(rng() % 9) / 8.0;
  const auto types = bin_effects(single_row(v), 5);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[i] < v[j]) {
        EXPECT_LE(types.dm.values[i], types.dm.values[j]);
      }
    }
  EXPECT_THROW(bin_effects(single_row(v), 1), ConfigError);
}

TEST(PresenceTypes, SingleTypeForCoOccurringPairs) {
  const EntityLayout L{1, 1, 2};
  const auto d = from_columns({{1, 0, 1}, {0, 1, 0}, {1, 0, 0}, {0, 0, 0}});
  const auto t = presence_edge_types(d, L, 5);
  EXPECT_EQ(t.dm(0, 0), 0);
  EXPECT_EQ(t.dm(0, 1), TypeTable::kNoEdge);
  EXPECT_EQ(t.pm(0, 0), TypeTable::kNoEdge);
}

TEST(EffectsIo, CsvRoundTrip) {
  const auto vocab = testing::make_cohort(2, 1, 3);
  Table t(2, 3);
  t.values = {0.1, -0.25, 1.0 / 3.0, 0.0, 1e-17, -1.0};
  const auto text = format_table_csv(t, vocab.diseases, vocab.medications);
  EXPECT_EQ(text.substr(0, text.find('\n')), "code,m0,m1,m2");
  EXPECT_EQ(parse_table_csv(text, vocab.diseases, vocab.medications), t);

  TypeTable tt(1, 3);
  tt.values = {0, TypeTable::kNoEdge, 4};
  EXPECT_EQ(parse_types_csv(format_types_csv(tt, vocab.procedures, vocab.medications), vocab.procedures,
                            vocab.medications),
            tt);
  EXPECT_THROW(parse_table_csv("code,m0,m1,m2\nd0,1,2\nd1,1,2,3\n", vocab.diseases, vocab.medications), ParseError);
  EXPECT_THROW(parse_table_csv("code,m0,m1,m2\nd0,1,2,3\n", vocab.diseases, vocab.medications), ParseError);
  EXPECT_THROW(parse_table_csv("code,m0,m1,m2\nd0,1,x,3\nd1,1,2,3\n", vocab.diseases, vocab.medications),
               ParseError);
}

TEST(EffectsIo, ColumnOrderFollowsTheHeader) {
  const auto vocab = testing::make_cohort(1, 0, 2);
  const auto t = parse_table_csv("code,m1,m0\nd0,0.5,0.25\n", vocab.diseases, vocab.medications);
  EXPECT_EQ(t(0, 0), 0.25);
  EXPECT_EQ(t(0, 1), 0.5);
}

}  // namespace
}  // namespace causalrx::effects
