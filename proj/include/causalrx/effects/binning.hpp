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
#include <vector>

#include "causalrx/effects/effects.hpp"

namespace causalrx::effects {

/// Integer table of relation types; kNoEdge marks an absent bipartite edge.
struct TypeTable {
  static constexpr int kNoEdge = -1;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> values;

  TypeTable() = default;
  TypeTable(std::size_t r, std::size_t c, int fill = 0) : rows(r), cols(c), values(r * c, fill) {}
  int& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  int operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  bool operator==(const TypeTable&) const = default;
};

struct EdgeTypeMap {
  std::size_t relations = 5;
  std::vector<double> boundaries;  // strictly ascending, at most relations - 1
  TypeTable dm;
  TypeTable pm;

  const TypeTable& of(EntityKind treatment_kind) const { return treatment_kind == EntityKind::procedure ? pm : dm; }

  /// Type of a value: number of boundaries strictly below it, so boundary values
  /// fall into the lower bin.
  int type_of(double value) const {
    return static_cast<int>(std::lower_bound(boundaries.begin(), boundaries.end(), value) - boundaries.begin());
  }
  bool operator==(const EdgeTypeMap&) const = default;
};

/// Equal-frequency binning of all dm and pm entries into R relation types.
/// Boundaries start at the R-1 empirical quantiles; duplicates collapse, and when
/// that leaves fewer than min(R, #distinct) - 1 cuts, the most populated splittable
/// bin is split at its count median until distinct values are separated as far as
/// R allows.
inline EdgeTypeMap bin_effects(const EffectMatrix& matrix, std::size_t relations) {
  if (relations < 2) throw ConfigError("number of edge types must be >= 2");
  std::vector<double> values = matrix.dm.values;
  values.insert(values.end(), matrix.pm.values.begin(), matrix.pm.values.end());
  EdgeTypeMap out;
  out.relations = relations;
  if (!values.empty()) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double vmax = values.back();
    for (std::size_t k = 1; k < relations; ++k) {
      const std::size_t pos = (k * n + relations - 1) / relations;  // ceil(k n / R)
      const double b = values[pos == 0 ? 0 : pos - 1];
      if (b < vmax && (out.boundaries.empty() || b > out.boundaries.back())) out.boundaries.push_back(b);
    }
    std::vector<double> distinct = values;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const std::size_t target = std::min(relations, distinct.size()) - 1;
    while (out.boundaries.size() < target) {
      // Bins as half-open ranges (lo, hi] over the sorted values.
      std::size_t best_begin = 0, best_end = 0, best_count = 0;
      std::size_t begin = 0;
      for (std::size_t b = 0; b <= out.boundaries.size(); ++b) {
        const std::size_t end = b < out.boundaries.size()
                                    ? static_cast<std::size_t>(std::upper_bound(values.begin(), values.end(),
                                                                                out.boundaries[b]) -
                                                               values.begin())
                                    : n;
        const bool splittable = end > begin && values[begin] != values[end - 1];
        if (splittable && end - begin > best_count) {
          best_count = end - begin;
          best_begin = begin;
          best_end = end;
        }
        begin = end;
      }
      if (best_count == 0) break;
      // Cut after the distinct value whose cumulative count is closest to half.
      double cut = values[best_begin];
      std::size_t best_gap = n + 1;
      for (std::size_t i = best_begin; i + 1 < best_end; ++i) {
        if (values[i] == values[i + 1]) continue;
        const std::size_t lower = i + 1 - best_begin;
        const std::size_t gap = lower * 2 > best_count ? lower * 2 - best_count : best_count - lower * 2;
        if (gap < best_gap) {
          best_gap = gap;
          cut = values[i];
        }
      }
      out.boundaries.insert(std::lower_bound(out.boundaries.begin(), out.boundaries.end(), cut), cut);
    }
  }
  auto typed = [&](const Table& t) {
    TypeTable tt(t.rows, t.cols);
    for (std::size_t i = 0; i < t.values.size(); ++i) tt.values[i] = out.type_of(t.values[i]);
    return tt;
  };
  out.dm = typed(matrix.dm);
  out.pm = typed(matrix.pm);
  return out;
}

/// Single relation type for every treatment/medication pair that co-occurs in at
/// least one visit; other pairs get no edge.
inline EdgeTypeMap presence_edge_types(const BinaryDataset& data, const EntityLayout& layout, std::size_t relations) {
  EdgeTypeMap out;
  out.relations = relations;
  out.dm = TypeTable(layout.n_diseases, layout.n_medications);
  out.pm = TypeTable(layout.n_procedures, layout.n_medications);
  for (EntityKind kind : {EntityKind::disease, EntityKind::procedure}) {
    TypeTable& t = kind == EntityKind::disease ? out.dm : out.pm;
    for (std::size_t r = 0; r < t.rows; ++r)
      for (std::size_t m = 0; m < t.cols; ++m) {
        const auto a = static_cast<std::size_t>(layout.global(kind, static_cast<int>(r)));
        const auto b = static_cast<std::size_t>(layout.global(EntityKind::medication, static_cast<int>(m)));
        t(r, m) = data.co_count(a, b) > 0 ? 0 : TypeTable::kNoEdge;
      }
  }
  return out;
}

}  // namespace causalrx::effects
