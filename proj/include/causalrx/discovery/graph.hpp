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
#include <cstddef>
#include <queue>
#include <utility>
#include <vector>

#include "causalrx/core/error.hpp"

namespace causalrx::discovery {

using Edge = std::pair<int, int>;  // (parent, child)

/// Directed acyclic graph over entity ordinals. Every mutation keeps the graph acyclic.
class CausalGraph {
 public:
  CausalGraph() = default;
  explicit CausalGraph(std::size_t n) : parents_(n), children_(n) {}

  std::size_t size() const { return parents_.size(); }
  const std::vector<int>& parents(int v) const { return parents_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& children(int v) const { return children_[static_cast<std::size_t>(v)]; }

  bool has_edge(int parent, int child) const {
    const auto& p = parents(child);
    return std::binary_search(p.begin(), p.end(), parent);
  }
  bool adjacent(int a, int b) const { return has_edge(a, b) || has_edge(b, a); }

  /// True when `to` is reachable from `from` along directed edges.
  bool reachable(int from, int to) const {
    if (from == to) return true;
    std::vector<char> seen(size(), 0);
    std::vector<int> stack{from};
    seen[static_cast<std::size_t>(from)] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int c : children(v)) {
        if (c == to) return true;
        if (!seen[static_cast<std::size_t>(c)]) {
          seen[static_cast<std::size_t>(c)] = 1;
          stack.push_back(c);
        }
      }
    }
    return false;
  }

  bool would_create_cycle(int parent, int child) const { return reachable(child, parent); }

  void add_edge(int parent, int child) {
    check(parent);
    check(child);
    if (parent == child) throw UsageError("self-loop");
    if (has_edge(parent, child)) return;
    if (would_create_cycle(parent, child)) throw UsageError("edge would create a cycle");
    insert_sorted(parents_[static_cast<std::size_t>(child)], parent);
    insert_sorted(children_[static_cast<std::size_t>(parent)], child);
  }

  void remove_edge(int parent, int child) {
    erase_value(parents_[static_cast<std::size_t>(child)], parent);
    erase_value(children_[static_cast<std::size_t>(parent)], child);
  }

  /// Edges sorted by (parent, child).
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (std::size_t p = 0; p < size(); ++p)
      for (int c : children_[p]) out.emplace_back(static_cast<int>(p), c);
    return out;
  }
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& c : children_) n += c.size();
    return n;
  }

  /// Acyclicity certificate: a topological order (lowest index first among ready nodes).
  std::vector<int> topological_order() const {
    std::vector<int> indeg(size());
    for (std::size_t v = 0; v < size(); ++v) indeg[v] = static_cast<int>(parents_[v].size());
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (std::size_t v = 0; v < size(); ++v)
      if (indeg[v] == 0) ready.push(static_cast<int>(v));
    std::vector<int> order;
    while (!ready.empty()) {
      int v = ready.top();
      ready.pop();
      order.push_back(v);
      for (int c : children(v))
        if (--indeg[static_cast<std::size_t>(c)] == 0) ready.push(c);
    }
    return order;
  }
  bool is_acyclic() const { return topological_order().size() == size(); }

  bool operator==(const CausalGraph& other) const { return parents_ == other.parents_; }

 private:
  void check(int v) const {
    if (v < 0 || static_cast<std::size_t>(v) >= size()) throw UsageError("node out of range");
  }
  static void insert_sorted(std::vector<int>& v, int x) { v.insert(std::lower_bound(v.begin(), v.end(), x), x); }
  static void erase_value(std::vector<int>& v, int x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x) v.erase(it);
  }

  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
};

/// Partially directed graph; used for the CPDAG representation of an equivalence class.
class Pdag {
 public:
  enum class Mark : unsigned char { none, forward, backward, undirected };  // relative to (i < j)

  explicit Pdag(std::size_t n) : n_(n), marks_(n * n, Mark::none) {}

  std::size_t size() const { return n_; }

  Mark mark(int i, int j) const {
    return i < j ? marks_[idx(i, j)] : flip(marks_[idx(j, i)]);
  }
  void set_directed(int from, int to) {
    if (from < to)
      marks_[idx(from, to)] = Mark::forward;
    else
      marks_[idx(to, from)] = Mark::backward;
  }
  void set_undirected(int a, int b) { marks_[idx(std::min(a, b), std::max(a, b))] = Mark::undirected; }

  bool adjacent(int a, int b) const { return mark(a, b) != Mark::none; }
  bool directed(int from, int to) const { return mark(from, to) == Mark::forward; }
  bool undirected(int a, int b) const { return mark(a, b) == Mark::undirected; }

 private:
  static Mark flip(Mark m) {
    if (m == Mark::forward) return Mark::backward;
    if (m == Mark::backward) return Mark::forward;
    return m;
  }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j); }

  std::size_t n_;
  std::vector<Mark> marks_;
};

/// CPDAG of a DAG: skeleton, v-structures, then Meek rules R1-R3 to a fixed point.
inline Pdag to_cpdag(const CausalGraph& dag) {
  const int n = static_cast<int>(dag.size());
  Pdag g(dag.size());
  for (auto [p, c] : dag.edges()) g.set_undirected(p, c);
  for (int c = 0; c < n; ++c) {
    const auto& pa = dag.parents(c);
    for (std::size_t a = 0; a < pa.size(); ++a)
      for (std::size_t b = a + 1; b < pa.size(); ++b)
        if (!dag.adjacent(pa[a], pa[b])) {
          g.set_directed(pa[a], c);
          g.set_directed(pa[b], c);
        }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (a == b || !g.undirected(a, b)) continue;
        bool orient = false;
        for (int c = 0; c < n && !orient; ++c) {
          if (c == a || c == b) continue;
          // R1: c -> a - b, c and b non-adjacent  =>  a -> b
          if (g.directed(c, a) && !g.adjacent(c, b)) orient = true;
          // R2: a -> c -> b  =>  a -> b
          if (g.directed(a, c) && g.directed(c, b)) orient = true;
        }
        // R3: a - c -> b, a - d -> b, c and d non-adjacent  =>  a -> b
        for (int c = 0; c < n && !orient; ++c) {
          if (c == a || c == b || !g.undirected(a, c) || !g.directed(c, b)) continue;
          for (int d = c + 1; d < n && !orient; ++d) {
            if (d == a || d == b || !g.undirected(a, d) || !g.directed(d, b)) continue;
            if (!g.adjacent(c, d)) orient = true;
          }
        }
        if (orient) {
          g.set_directed(a, b);
          changed = true;
        }
      }
    }
  }
  return g;
}

/// Structural Hamming distance between two PDAGs: number of node pairs whose edge
/// status (absent, either direction, undirected) differs.
inline std::size_t structural_hamming_distance(const Pdag& a, const Pdag& b) {
  if (a.size() != b.size()) throw UsageError("SHD of graphs with different node counts");
  std::size_t d = 0;
  const int n = static_cast<int>(a.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (a.mark(i, j) != b.mark(i, j)) ++d;
  return d;
}

inline std::size_t skeleton_distance(const CausalGraph& a, const CausalGraph& b) {
  std::size_t d = 0;
  const int n = static_cast<int>(a.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (a.adjacent(i, j) != b.adjacent(i, j)) ++d;
  return d;
}

}  // namespace causalrx::discovery
