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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "causalrx/core/cohort.hpp"

namespace causalrx {

struct SplitRatios {
  double train = 4.0 / 6.0;
  double validation = 1.0 / 6.0;
  double test = 1.0 / 6.0;
};

struct CohortSplit {
  PatientCohort train;
  PatientCohort validation;
  PatientCohort test;
};

/// Patient-level partition. Validation and test sizes are floor(n * ratio);
/// the rounding remainder goes to train.
inline CohortSplit split_cohort(const PatientCohort& cohort, const SplitRatios& ratios, std::uint64_t seed) {
  const double sum = ratios.train + ratios.validation + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0) throw ConfigError("split ratios must be >= 0");
  const std::size_t n = cohort.patients.size();
  if (n < 3) throw ConfigError("cohort needs at least 3 patients to split, got " + std::to_string(n));

  auto floor_count = [n](double r) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9));
  };
  const std::size_t n_val = floor_count(ratios.validation);
  const std::size_t n_test = floor_count(ratios.test);
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto take = [&](std::size_t begin, std::size_t count) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(begin + count));
    std::sort(idx.begin(), idx.end());  // keep file order inside each split
    std::vector<PatientHistory> out;
    out.reserve(count);
    for (std::size_t i : idx) out.push_back(cohort.patients[i]);
    return cohort.with_patients(std::move(out));
  };
  return {take(0, n_train), take(n_train, n_val), take(n_train + n_val, n_test)};
}

/// Patient indices for each bootstrap round: ceil(fraction * n) draws with replacement.
inline std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n, std::size_t rounds, double fraction,
                                                               std::uint64_t seed) {
  if (n == 0) throw ConfigError("bootstrap needs a non-empty cohort");
  if (rounds < 1) throw ConfigError("bootstrap rounds must be >= 1");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("bootstrap fraction must lie in (0, 1]");
  const auto per_round = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::vector<std::size_t>> out(rounds);
  for (auto& round : out) {
    round.reserve(per_round);
    for (std::size_t i = 0; i < per_round; ++i) round.push_back(pick(rng));
  }
  return out;
}

/// Patient-level sampling with replacement, one cohort per round.
inline std::vector<PatientCohort> bootstrap_sample(const PatientCohort& test, std::size_t rounds, double fraction,
                                                   std::uint64_t seed) {
  std::vector<PatientCohort> out;
  for (const auto& idx : bootstrap_indices(test.patients.size(), rounds, fraction, seed)) {
    std::vector<PatientHistory> sample;
    sample.reserve(idx.size());
    for (std::size_t i : idx) sample.push_back(test.patients[i]);
    out.push_back(test.with_patients(std::move(sample)));
  }
  return out;
}

}  // namespace causalrx
