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

// Score-based structure search over DAGs: greedy forward insertion and backward
// deletion repeated to a fixed point, followed by a reversal pass, with the whole
// cycle repeated until no move improves the score.
//
// Candidate moves are ranked by (score delta desc, child asc, parent asc), which
// makes the result independent of evaluation order.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "causalrx/core/cohort.hpp"
#include "causalrx/discovery/dataset.hpp"
#include "causalrx/discovery/graph.hpp"
#include "causalrx/discovery/score.hpp"

namespace causalrx::discovery {

inline constexpr std::size_t kNoPrescreen = std::numeric_limits<std::size_t>::max();

/// Symmetric admissibility matrix for candidate edges.
class AllowedPairs {
 public:
  AllowedPairs() = default;
  AllowedPairs(std::size_t n, bool value) : n_(n), allowed_(n * n, value ? 1 : 0) {
    for (std::size_t i = 0; i < n; ++i) allowed_[i * n + i] = 0;
  }
  std::size_t size() const { return n_; }
  bool operator()(int a, int b) const {
    return allowed_[static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b)] != 0;
  }
  void allow(int a, int b) {
    if (a == b) return;
    allowed_[static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b)] = 1;
    allowed_[static_cast<std::size_t>(b) * n_ + static_cast<std::size_t>(a)] = 1;
  }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(allowed_.begin(), allowed_.end(), 1)) / 2;
  }

 private:
  std::size_t n_ = 0;
  std::vector<char> allowed_;
};

/// Pointwise mutual information log(P(a,b) / (P(a)P(b))) from raw counts;
/// -inf when the pair never co-occurs or either column is empty.
inline double pointwise_mutual_information(const BinaryDataset& data, int a, int b) {
  const double n = static_cast<double>(data.rows());
  const double na = static_cast<double>(data.ones(static_cast<std::size_t>(a)));
  const double nb = static_cast<double>(data.ones(static_cast<std::size_t>(b)));
  const double nab = static_cast<double>(data.co_count(static_cast<std::size_t>(a), static_cast<std::size_t>(b)));
  if (nab == 0.0 || na == 0.0 || nb == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(nab * n / (na * nb));
}

/// For every variable, its top-k partners by PMI (ties to the lower ordinal) become
/// admissible neighbours. k == kNoPrescreen admits every pair.
inline AllowedPairs candidate_prescreen(const BinaryDataset& data, std::size_t k) {
  const std::size_t n = data.cols();
  if (k == 0) throw ConfigError("prescreen k must be >= 1");
  if (k == kNoPrescreen || k + 1 >= n) return AllowedPairs(n, true);
  AllowedPairs allowed(n, false);
  std::vector<double> pmi(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      pmi[a * n + b] = pmi[b * n + a] = pointwise_mutual_information(data, static_cast<int>(a), static_cast<int>(b));
  std::vector<int> others;
  for (std::size_t a = 0; a < n; ++a) {
    others.clear();
    for (std::size_t b = 0; b < n; ++b)
      if (b != a) others.push_back(static_cast<int>(b));
    std::stable_sort(others.begin(), others.end(), [&](int x, int y) {
      return pmi[a * n + static_cast<std::size_t>(x)] > pmi[a * n + static_cast<std::size_t>(y)];
    });
    for (std::size_t i = 0; i < k; ++i) allowed.allow(static_cast<int>(a), others[i]);
  }
  return allowed;
}

struct SearchConfig {
  ScoreConfig score;
  std::size_t prescreen_k = 10;
  /// Optional hard constraint: returns true when parent -> child is forbidden.
  std::function<bool(int, int)> forbidden;
  /// Strict-improvement threshold guarding against floating-point churn.
  double min_improvement = 1e-9;
};

/// Forbids medication -> disease/procedure edges under the unified layout.
inline std::function<bool(int, int)> treatment_tier_constraint(const EntityLayout& layout) {
  return [layout](int parent, int child) {
    return layout.kind_of(parent) == EntityKind::medication && layout.kind_of(child) != EntityKind::medication;
  };
}

struct SearchMove {
  // reverse_remove: reverse the covered edge parent -> child, then drop removed_parent -> removed_child.
  enum class Kind { insert, remove, reverse, reverse_remove };
  Kind kind;
  int parent;  // for reverse: the original parent
  int child;
  double delta;
  double score_after;
  int removed_parent = -1;
  int removed_child = -1;
};

struct SearchResult {
  CausalGraph graph;
  double score = 0.0;
  std::vector<SearchMove> moves;
};

namespace detail {

struct Candidate {
  double delta;
  int child;
  int parent;
};

inline bool better(const Candidate& a, const Candidate& b) {
  if (a.delta != b.delta) return a.delta > b.delta;
  if (a.child != b.child) return a.child < b.child;
  return a.parent < b.parent;
}

inline std::vector<int> with_parent(const std::vector<int>& parents, int p) {
  std::vector<int> out = parents;
  out.insert(std::lower_bound(out.begin(), out.end(), p), p);
  return out;
}

inline std::vector<int> without_parent(const std::vector<int>& parents, int p) {
  std::vector<int> out;
  out.reserve(parents.size());
  for (int x : parents)
    if (x != p) out.push_back(x);
  return out;
}

}  // namespace detail

class GreedySearch {
 public:
  GreedySearch(const BinaryDataset& data, SearchConfig cfg)
      : data_(data), cfg_(std::move(cfg)), cache_(data, cfg_.score), graph_(data.cols()) {
    allowed_ = candidate_prescreen(data, cfg_.prescreen_k == 0 ? kNoPrescreen : cfg_.prescreen_k);
    local_.resize(data.cols());
    for (std::size_t v = 0; v < data.cols(); ++v) local_[v] = cache_(static_cast<int>(v), {});
  }

  SearchResult run() {
    bool any = true;
    while (any) {
      any = false;
      bool phase = true;
      while (phase) {
        phase = false;
        while (step_insert()) phase = any = true;
        while (step_remove()) phase = any = true;
        if (step_reverse_remove()) phase = any = true;
      }
      while (step_reverse()) any = true;
    }
    return {graph_, total(), moves_};
  }

  double total() const { return std::accumulate(local_.begin(), local_.end(), 0.0); }

 private:
  bool admissible(int parent, int child) const {
    if (!allowed_(parent, child)) return false;
    if (cfg_.forbidden && cfg_.forbidden(parent, child)) return false;
    return true;
  }

  void record(SearchMove::Kind kind, int parent, int child, double delta) {
    moves_.push_back({kind, parent, child, delta, total()});
  }

  bool step_insert() {
    const int n = static_cast<int>(graph_.size());
    std::vector<detail::Candidate> cands;
    for (int c = 0; c < n; ++c) {
      const auto& pa = graph_.parents(c);
      if (pa.size() >= cfg_.score.max_parents) continue;
      for (int p = 0; p < n; ++p) {
        if (p == c || graph_.adjacent(p, c) || !admissible(p, c)) continue;
        const double d = cache_(c, detail::with_parent(pa, p)) - local_[static_cast<std::size_t>(c)];
        if (d > cfg_.min_improvement) cands.push_back({d, c, p});
      }
    }
    std::sort(cands.begin(), cands.end(), detail::better);
    for (const auto& cand : cands) {
      if (graph_.would_create_cycle(cand.parent, cand.child)) continue;
      graph_.add_edge(cand.parent, cand.child);
      local_[static_cast<std::size_t>(cand.child)] = cache_(cand.child, graph_.parents(cand.child));
      record(SearchMove::Kind::insert, cand.parent, cand.child, cand.delta);
      return true;
    }
    return false;
  }

  bool step_remove() {
    std::vector<detail::Candidate> cands;
    for (auto [p, c] : graph_.edges()) {
      const double d = cache_(c, detail::without_parent(graph_.parents(c), p)) - local_[static_cast<std::size_t>(c)];
      if (d > cfg_.min_improvement) cands.push_back({d, c, p});
    }
    if (cands.empty()) return false;
    const auto best = *std::min_element(cands.begin(), cands.end(), detail::better);
    graph_.remove_edge(best.parent, best.child);
    local_[static_cast<std::size_t>(best.child)] = cache_(best.child, graph_.parents(best.child));
    record(SearchMove::Kind::remove, best.parent, best.child, best.delta);
    return true;
  }

  // Deletion inside the equivalence class: a covered edge x -> y (pa(y) = pa(x) + x)
  // can be reversed without leaving the class, which may expose a deletion that no
  // single-edge move reaches. The pair is one move and must improve as a whole.
  bool step_reverse_remove() {
    // (delta desc, reversed child asc, reversed parent asc, deleted child asc, deleted parent asc)
    using Key = std::tuple<double, int, int, int, int>;
    std::optional<Key> best;
    for (auto [x, y] : graph_.edges()) {
      const auto pa_x = graph_.parents(x);
      if (graph_.parents(y) != detail::with_parent(pa_x, x) || !admissible(y, x)) continue;
      const auto new_x = detail::with_parent(pa_x, y);
      const double sx = cache_(x, new_x), sy = cache_(y, pa_x);
      const double rev = sx - local_[static_cast<std::size_t>(x)] + sy - local_[static_cast<std::size_t>(y)];
      auto consider = [&](int node, const std::vector<int>& pa, double base) {
        for (int q : pa) {
          const double d = rev + cache_(node, detail::without_parent(pa, q)) - base;
          if (d <= cfg_.min_improvement) continue;
          const Key k{-d, y, x, node, q};
          if (!best || k < *best) best = k;
        }
      };
      consider(x, new_x, sx);
      consider(y, pa_x, sy);
    }
    if (!best) return false;
    const auto [neg_delta, y, x, node, q] = *best;
    graph_.remove_edge(x, y);
    graph_.add_edge(y, x);
    graph_.remove_edge(q, node);
    local_[static_cast<std::size_t>(x)] = cache_(x, graph_.parents(x));
    local_[static_cast<std::size_t>(y)] = cache_(y, graph_.parents(y));
    record(SearchMove::Kind::reverse_remove, x, y, -neg_delta);
    moves_.back().removed_parent = q;
    moves_.back().removed_child = node;
    return true;
  }

  bool step_reverse() {
    std::vector<detail::Candidate> cands;
    for (auto [p, c] : graph_.edges()) {
      if (!admissible(c, p) || graph_.parents(p).size() >= cfg_.score.max_parents) continue;
      const double d = cache_(c, detail::without_parent(graph_.parents(c), p)) - local_[static_cast<std::size_t>(c)] +
                       cache_(p, detail::with_parent(graph_.parents(p), c)) - local_[static_cast<std::size_t>(p)];
      if (d > cfg_.min_improvement) cands.push_back({d, c, p});
    }
    std::sort(cands.begin(), cands.end(), detail::better);
    for (const auto& cand : cands) {
      graph_.remove_edge(cand.parent, cand.child);
      if (graph_.would_create_cycle(cand.child, cand.parent)) {
        graph_.add_edge(cand.parent, cand.child);
        continue;
      }
      graph_.add_edge(cand.child, cand.parent);
      local_[static_cast<std::size_t>(cand.child)] = cache_(cand.child, graph_.parents(cand.child));
      local_[static_cast<std::size_t>(cand.parent)] = cache_(cand.parent, graph_.parents(cand.parent));
      record(SearchMove::Kind::reverse, cand.parent, cand.child, cand.delta);
      return true;
    }
    return false;
  }

  const BinaryDataset& data_;
  SearchConfig cfg_;
  ScoreCache cache_;
  CausalGraph graph_;
  AllowedPairs allowed_;
  std::vector<double> local_;
  std::vector<SearchMove> moves_;
};

inline SearchResult greedy_search_with_log(const BinaryDataset& data, const SearchConfig& cfg = {}) {
  if (data.rows() == 0) throw ConfigError("greedy search needs a non-empty dataset");
  return GreedySearch(data, cfg).run();
}

inline CausalGraph greedy_search(const BinaryDataset& data, const SearchConfig& cfg = {}) {
  return greedy_search_with_log(data, cfg).graph;
}

/// Learns a graph over a subset of variables (by unified index) and maps it back
/// onto the full index space.
inline CausalGraph discover_subgraph(const BinaryDataset& data, const std::vector<int>& variables,
                                     const SearchConfig& cfg) {
  const auto sub = data.select_columns(variables);
  SearchConfig local = cfg;
  if (cfg.forbidden) {
    local.forbidden = [&variables, f = cfg.forbidden](int p, int c) {
      return f(variables[static_cast<std::size_t>(p)], variables[static_cast<std::size_t>(c)]);
    };
  }
  const auto g = greedy_search(sub, local);
  CausalGraph out(data.cols());
  for (auto [p, c] : g.edges()) out.add_edge(variables[static_cast<std::size_t>(p)], variables[static_cast<std::size_t>(c)]);
  return out;
}

}  // namespace causalrx::discovery
