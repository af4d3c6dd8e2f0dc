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
#include <map>
#include <vector>

#include "causalrx/core/cohort.hpp"
#include "causalrx/discovery/graph.hpp"
#include "causalrx/discovery/search.hpp"

namespace causalrx::discovery {

/// Directed graph over the entities of one kind present in a visit.
/// Edges index into `nodes` (local ordinals of that kind, ascending).
struct HomogeneousGraph {
  std::vector<int> nodes;
  std::vector<std::pair<int, int>> edges;

  int position(int ordinal) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), ordinal);
    if (it == nodes.end() || *it != ordinal) return -1;
    return static_cast<int>(it - nodes.begin());
  }
  std::size_t in_degree(int pos) const {
    return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [pos](auto e) { return e.second == pos; }));
  }
  std::size_t out_degree(int pos) const {
    return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [pos](auto e) { return e.first == pos; }));
  }
};

struct VisitGraphs {
  HomogeneousGraph diseases;     // over D_t
  HomogeneousGraph procedures;   // over P_t
  HomogeneousGraph medications;  // over M_{t-1}

  const HomogeneousGraph& of(EntityKind kind) const {
    switch (kind) {
      case EntityKind::disease: return diseases;
      case EntityKind::procedure: return procedures;
      default: return medications;
    }
  }
};

inline HomogeneousGraph induce_homogeneous(const CausalGraph& global, const EntityLayout& layout, EntityKind kind,
                                           const OrdinalSet& present) {
  HomogeneousGraph g;
  g.nodes = present;
  for (std::size_t i = 0; i < present.size(); ++i) {
    const int gi = layout.global(kind, present[i]);
    for (std::size_t j = 0; j < present.size(); ++j) {
      if (i == j) continue;
      if (global.has_edge(gi, layout.global(kind, present[j])))
        g.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return g;
}

/// Node-induced, type-filtered subgraphs of the global graph. Cross-type edges are
/// dropped here; they feed the effect matrices instead.
inline VisitGraphs induce_visit_graphs(const CausalGraph& global, const EntityLayout& layout, const Visit& visit,
                                       const OrdinalSet& previous_medications) {
  if (global.size() != layout.total()) throw UsageError("global graph and vocabulary sizes differ");
  return {induce_homogeneous(global, layout, EntityKind::disease, visit.diseases),
          induce_homogeneous(global, layout, EntityKind::procedure, visit.procedures),
          induce_homogeneous(global, layout, EntityKind::medication, previous_medications)};
}

/// Supplies per-visit graphs either by induction from one global graph (default) or
/// by re-running discovery on each visit's entity set (memoized per set).
class VisitGraphProvider {
 public:
  VisitGraphProvider(CausalGraph global, EntityLayout layout)
      : global_(std::move(global)), layout_(layout) {}

  VisitGraphProvider(CausalGraph global, EntityLayout layout, const BinaryDataset& data, SearchConfig cfg)
      : global_(std::move(global)), layout_(layout), data_(&data), cfg_(std::move(cfg)) {}

  bool rediscovers() const { return data_ != nullptr; }
  const CausalGraph& global() const { return global_; }

  VisitGraphs operator()(const Visit& visit, const OrdinalSet& previous_medications) {
    if (!data_) return induce_visit_graphs(global_, layout_, visit, previous_medications);
    std::vector<int> vars;
    for (int d : visit.diseases) vars.push_back(layout_.global(EntityKind::disease, d));
    for (int p : visit.procedures) vars.push_back(layout_.global(EntityKind::procedure, p));
    for (int m : previous_medications) vars.push_back(layout_.global(EntityKind::medication, m));
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    auto it = cache_.find(vars);
    if (it == cache_.end()) it = cache_.emplace(vars, discover_subgraph(*data_, vars, cfg_)).first;
    return induce_visit_graphs(it->second, layout_, visit, previous_medications);
  }

 private:
  CausalGraph global_;
  EntityLayout layout_;
  const BinaryDataset* data_ = nullptr;
  SearchConfig cfg_;
  std::map<std::vector<int>, CausalGraph> cache_;
};

}  // namespace causalrx::discovery
