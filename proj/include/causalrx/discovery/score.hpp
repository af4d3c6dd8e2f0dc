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

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "causalrx/discovery/dataset.hpp"
#include "causalrx/discovery/graph.hpp"

namespace causalrx::discovery {

struct ScoreConfig {
  double alpha = 1.0;          // Laplace pseudo-count per outcome value
  std::size_t max_parents = 3;
};

/// BIC-style local score of a binary variable given its parents: Laplace-smoothed
/// log-likelihood minus 0.5 * log(n) per parent configuration.
inline double local_score(int variable, std::span<const int> parents, const BinaryDataset& data,
                          const ScoreConfig& cfg = {}) {
  if (parents.size() > cfg.max_parents)
    throw ScoringError("parent set of size " + std::to_string(parents.size()) + " exceeds cap " +
                       std::to_string(cfg.max_parents));
  for (int p : parents)
    if (p == variable) throw ScoringError("parent set contains the variable itself");
  const auto counts = data.contingency(variable, parents);
  const std::size_t configs = counts.size() / 2;
  double loglik = 0.0;
  for (std::size_t c = 0; c < configs; ++c) {
    const double n0 = counts[2 * c], n1 = counts[2 * c + 1];
    const double denom = n0 + n1 + 2.0 * cfg.alpha;
    if (n0 > 0) loglik += n0 * std::log((n0 + cfg.alpha) / denom);
    if (n1 > 0) loglik += n1 * std::log((n1 + cfg.alpha) / denom);
  }
  const double n = static_cast<double>(data.rows());
  const double penalty = n > 0 ? static_cast<double>(configs) * 0.5 * std::log(n) : 0.0;
  return loglik - penalty;
}

/// Memoizing wrapper keyed on (variable, sorted parent set).
class ScoreCache {
 public:
  ScoreCache(const BinaryDataset& data, ScoreConfig cfg) : data_(&data), cfg_(cfg) {}

  const ScoreConfig& config() const { return cfg_; }
  const BinaryDataset& data() const { return *data_; }

  double operator()(int variable, std::span<const int> sorted_parents) {
    // Key slots: variable, parent count, up to 6 parents.
    if (sorted_parents.size() > 6 || data_->cols() >= 0xffff)
      return local_score(variable, sorted_parents, *data_, cfg_);
    Key key{};
    key[0] = static_cast<std::uint16_t>(variable);
    key[1] = static_cast<std::uint16_t>(sorted_parents.size());
    for (std::size_t i = 0; i < sorted_parents.size(); ++i) key[i + 2] = static_cast<std::uint16_t>(sorted_parents[i]);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double s = local_score(variable, sorted_parents, *data_, cfg_);
    cache_.emplace(key, s);
    return s;
  }

  std::size_t size() const { return cache_.size(); }

 private:
  using Key = std::array<std::uint16_t, 8>;
  struct Hash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t lo = 0, hi = 0;
      for (std::size_t i = 0; i < 4; ++i) {
        lo = (lo << 16) | k[i];
        hi = (hi << 16) | k[i + 4];
      }
      return std::hash<std::uint64_t>{}(lo ^ (hi * 0x9e3779b97f4a7c15ULL));
    }
  };
  const BinaryDataset* data_;
  ScoreConfig cfg_;
  std::unordered_map<Key, double, Hash> cache_;
};

/// Decomposable graph score: sum of local scores.
inline double score_graph(const CausalGraph& graph, const BinaryDataset& data, const ScoreConfig& cfg = {}) {
  if (!graph.is_acyclic()) throw UsageError("score_graph requires an acyclic graph");
  double total = 0.0;
  for (std::size_t v = 0; v < graph.size(); ++v)
    total += local_score(static_cast<int>(v), graph.parents(static_cast<int>(v)), data, cfg);
  return total;
}

}  // namespace causalrx::discovery
