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

// Backdoor-adjusted effect estimation of diseases/procedures (treatments) on
// medications (outcomes) by nonparametric standardization over discrete strata.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "causalrx/core/cohort.hpp"
#include "causalrx/discovery/dataset.hpp"
#include "causalrx/discovery/graph.hpp"
#include "causalrx/discovery/search.hpp"

namespace causalrx::effects {

using discovery::BinaryDataset;
using discovery::CausalGraph;

/// Dense row-major real table.
struct Table {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Table() = default;
  Table(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  bool operator==(const Table&) const = default;
};

/// Disease x medication and procedure x medication effect tables.
struct EffectMatrix {
  Table dm;
  Table pm;

  const Table& of(EntityKind treatment_kind) const { return treatment_kind == EntityKind::procedure ? pm : dm; }
  bool operator==(const EffectMatrix&) const = default;
};

inline constexpr std::size_t kMaxAdjusters = 3;

/// Parents of the treatment; when more than three, the three with the largest
/// |PMI| with the outcome (ties to the lower ordinal). Returned ascending.
inline std::vector<int> backdoor_set(const CausalGraph& graph, const EntityLayout& layout, const BinaryDataset& data,
                                     int treatment, int outcome) {
  if (layout.kind_of(treatment) == EntityKind::medication)
    throw UsageError("backdoor treatment must be a disease or procedure");
  if (layout.kind_of(outcome) != EntityKind::medication) throw UsageError("backdoor outcome must be a medication");
  std::vector<int> parents = graph.parents(treatment);
  parents.erase(std::remove(parents.begin(), parents.end(), outcome), parents.end());
  if (parents.size() <= kMaxAdjusters) return parents;
  std::vector<std::pair<double, int>> ranked;
  for (int p : parents) ranked.emplace_back(std::abs(discovery::pointwise_mutual_information(data, p, outcome)), p);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<int> out;
  for (std::size_t i = 0; i < kMaxAdjusters; ++i) out.push_back(ranked[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

/// Standardized risk difference
///   sum_z [P(Y=1|T=1,z) - P(Y=1|T=0,z)] * P(z)
/// with Laplace (alpha = 1) smoothed conditionals and empirical stratum weights.
/// Returns exactly 0 when treatment and outcome never co-occur.
inline double estimate_ate(const BinaryDataset& data, int treatment, int outcome, const std::vector<int>& adjustment) {
  for (int z : adjustment)
    if (z == treatment || z == outcome) throw UsageError("adjustment set must exclude treatment and outcome");
  if (treatment == outcome) throw UsageError("treatment equals outcome");
  if (data.rows() == 0 || data.co_count(static_cast<std::size_t>(treatment), static_cast<std::size_t>(outcome)) == 0)
    return 0.0;
  std::vector<int> cols{treatment};
  cols.insert(cols.end(), adjustment.begin(), adjustment.end());
  const auto counts = data.contingency(outcome, cols);  // [2 * cfg + y], cfg bit0 = treatment
  const std::uint32_t strata = 1U << adjustment.size();
  const double n = static_cast<double>(data.rows());
  double ate = 0.0;
  for (std::uint32_t z = 0; z < strata; ++z) {
    const std::uint32_t c0 = z << 1, c1 = (z << 1) | 1U;
    const double t0y0 = counts[2 * c0], t0y1 = counts[2 * c0 + 1];
    const double t1y0 = counts[2 * c1], t1y1 = counts[2 * c1 + 1];
    const double nz = t0y0 + t0y1 + t1y0 + t1y1;
    if (nz == 0.0) continue;
    const double p1 = (t1y1 + 1.0) / (t1y0 + t1y1 + 2.0);
    const double p0 = (t0y1 + 1.0) / (t0y0 + t0y1 + 2.0);
    ate += (p1 - p0) * nz / n;
  }
  return ate;
}

/// Unadjusted smoothed risk difference (empty adjustment set).
inline double risk_difference(const BinaryDataset& data, int treatment, int outcome) {
  return estimate_ate(data, treatment, outcome, {});
}

inline EffectMatrix build_effect_matrices(const CausalGraph& graph, const BinaryDataset& data,
                                          const EntityLayout& layout) {
  if (graph.size() != layout.total() || data.cols() != layout.total())
    throw UsageError("graph, dataset and vocabulary sizes differ");
  EffectMatrix out{Table(layout.n_diseases, layout.n_medications), Table(layout.n_procedures, layout.n_medications)};
  for (EntityKind kind : {EntityKind::disease, EntityKind::procedure}) {
    Table& t = kind == EntityKind::disease ? out.dm : out.pm;
    for (std::size_t r = 0; r < t.rows; ++r) {
      const int tg = layout.global(kind, static_cast<int>(r));
      for (std::size_t m = 0; m < t.cols; ++m) {
        const int mg = layout.global(EntityKind::medication, static_cast<int>(m));
        const double ate = estimate_ate(data, tg, mg, backdoor_set(graph, layout, data, tg, mg));
        t(r, m) = std::clamp(ate, -1.0, 1.0);
      }
    }
  }
  return out;
}

/// Visit-level co-occurrence rates P(m in visit | t in visit); 0 for absent treatments.
inline EffectMatrix cooccurrence_matrices(const BinaryDataset& data, const EntityLayout& layout) {
  EffectMatrix out{Table(layout.n_diseases, layout.n_medications), Table(layout.n_procedures, layout.n_medications)};
  for (EntityKind kind : {EntityKind::disease, EntityKind::procedure}) {
    Table& t = kind == EntityKind::disease ? out.dm : out.pm;
    for (std::size_t r = 0; r < t.rows; ++r) {
      const auto tg = static_cast<std::size_t>(layout.global(kind, static_cast<int>(r)));
      const double nt = static_cast<double>(data.ones(tg));
      for (std::size_t m = 0; m < t.cols; ++m) {
        const auto mg = static_cast<std::size_t>(layout.global(EntityKind::medication, static_cast<int>(m)));
        t(r, m) = nt > 0 ? static_cast<double>(data.co_count(tg, mg)) / nt : 0.0;
      }
    }
  }
  return out;
}

}  // namespace causalrx::effects
