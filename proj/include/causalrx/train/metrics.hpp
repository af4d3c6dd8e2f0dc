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
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causalrx/core/cohort.hpp"
#include "causalrx/model/tape.hpp"

namespace causalrx::train {

namespace detail {

inline std::size_t intersection_size(const OrdinalSet& a, const OrdinalSet& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

}  // namespace detail

/// |P ∩ T| / |P ∪ T|; 1 when both are empty.
inline double metric_jaccard(const OrdinalSet& pred, const OrdinalSet& truth) {
  if (pred.empty() && truth.empty()) return 1.0;
  const auto inter = detail::intersection_size(pred, truth);
  return static_cast<double>(inter) / static_cast<double>(pred.size() + truth.size() - inter);
}

inline double metric_f1(const OrdinalSet& pred, const OrdinalSet& truth) {
  if (pred.empty() && truth.empty()) return 1.0;
  const auto inter = static_cast<double>(detail::intersection_size(pred, truth));
  const double p = pred.empty() ? 0.0 : inter / static_cast<double>(pred.size());
  const double r = truth.empty() ? 0.0 : inter / static_cast<double>(truth.size());
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

/// Average precision over the ranking by descending score (ties by ordinal).
/// nullopt when the visit has no positive label.
inline std::optional<double> metric_prauc(const model::Vec& scores, const OrdinalSet& truth) {
  if (truth.empty()) return std::nullopt;
  std::vector<int> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores(a) > scores(b); });
  double sum = 0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!contains(truth, order[k])) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(truth.size());
}

/// Interacting unordered pairs pooled over all visits, divided by all pooled pairs.
inline double metric_ddi_rate(const std::vector<OrdinalSet>& predicted, const DdiMatrix& ddi) {
  std::size_t pairs = 0, bad = 0;
  for (const auto& set : predicted)
    for (std::size_t i = 0; i < set.size(); ++i)
      for (std::size_t j = i + 1; j < set.size(); ++j) {
        ++pairs;
        if (ddi.interacts(set[i], set[j])) ++bad;
      }
  return pairs == 0 ? 0.0 : static_cast<double>(bad) / static_cast<double>(pairs);
}

inline double metric_avg_med(const std::vector<OrdinalSet>& predicted) {
  if (predicted.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& s : predicted) total += s.size();
  return static_cast<double>(total) / static_cast<double>(predicted.size());
}

struct MetricSet {
  double jaccard = 0, ddi_rate = 0, f1 = 0, prauc = 0, avg_med = 0;
};

/// One scored visit: model scores, selected set and recorded prescription.
struct ScoredVisit {
  model::Vec scores;
  OrdinalSet selected;
  OrdinalSet truth;
};

inline MetricSet compute_metrics(const std::vector<ScoredVisit>& visits, const DdiMatrix& ddi) {
  MetricSet m;
  if (visits.empty()) return m;
  std::vector<OrdinalSet> predicted;
  double pr_sum = 0;
  std::size_t pr_n = 0;
  for (const auto& v : visits) {
    m.jaccard += metric_jaccard(v.selected, v.truth);
    m.f1 += metric_f1(v.selected, v.truth);
    if (auto ap = metric_prauc(v.scores, v.truth)) {
      pr_sum += *ap;
      ++pr_n;
    }
    predicted.push_back(v.selected);
  }
  const auto n = static_cast<double>(visits.size());
  m.jaccard /= n;
  m.f1 /= n;
  m.prauc = pr_n == 0 ? 0.0 : pr_sum / static_cast<double>(pr_n);
  m.ddi_rate = metric_ddi_rate(predicted, ddi);
  m.avg_med = metric_avg_med(predicted);
  return m;
}

struct MetricsReport {
  std::vector<MetricSet> rounds;
  MetricSet mean;
  MetricSet std;  // sample standard deviation (n - 1); 0 for a single round
};

inline MetricsReport summarize(std::vector<MetricSet> rounds) {
  MetricsReport r;
  r.rounds = std::move(rounds);
  const auto n = static_cast<double>(r.rounds.size());
  if (r.rounds.empty()) return r;
  auto field = [](MetricSet& s, int k) -> double& {
    switch (k) {
      case 0: return s.jaccard;
      case 1: return s.ddi_rate;
      case 2: return s.f1;
      case 3: return s.prauc;
      default: return s.avg_med;
    }
  };
  for (int k = 0; k < 5; ++k) {
    double sum = 0;
    for (auto& s : r.rounds) sum += field(s, k);
    const double mu = sum / n;
    double ss = 0;
    for (auto& s : r.rounds) ss += (field(s, k) - mu) * (field(s, k) - mu);
    field(r.mean, k) = mu;
    field(r.std, k) = r.rounds.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return r;
}

inline nlohmann::ordered_json to_json(const MetricSet& m) {
  return {{"jaccard", m.jaccard}, {"ddi_rate", m.ddi_rate}, {"f1", m.f1}, {"prauc", m.prauc}, {"avg_med", m.avg_med}};
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json rounds = nlohmann::ordered_json::array();
  for (const auto& s : r.rounds) rounds.push_back(to_json(s));
  return {{"mean", to_json(r.mean)}, {"std", to_json(r.std)}, {"rounds", rounds}};
}

// ---- analytic random baseline ----------------------------------------------------

/// Per-medication prescription rate over all visits.
inline std::vector<double> marginal_rates(const PatientCohort& cohort) {
  std::vector<double> q(cohort.medications.size(), 0.0);
  const auto n = cohort.visit_count();
  if (n == 0) return q;
  for (const auto& p : cohort.patients)
    for (const auto& v : p.visits)
      for (int m : v.medications) q[static_cast<std::size_t>(m)] += 1.0;
  for (auto& x : q) x /= static_cast<double>(n);
  return q;
}

namespace detail {

/// Distribution of the number of successes among independent Bernoulli(p_i).
inline std::vector<double> poisson_binomial(const std::vector<double>& p) {
  std::vector<double> dist{1.0};
  for (double pi : p) {
    std::vector<double> next(dist.size() + 1, 0.0);
    for (std::size_t k = 0; k < dist.size(); ++k) {
      next[k] += dist[k] * (1.0 - pi);
      next[k + 1] += dist[k] * pi;
    }
    dist = std::move(next);
  }
  return dist;
}

}  // namespace detail

/// Expected Jaccard of a selector that includes each medication independently with
/// probability `rates[i]`, against the given truth set. Exact: X hits inside the
/// truth and Y picks outside it are independent Poisson-binomial counts, and
/// J = X / (|T| + Y) (both-empty counts as 1).
inline double expected_random_jaccard(const OrdinalSet& truth, const std::vector<double>& rates) {
  std::vector<double> in, out;
  for (std::size_t i = 0; i < rates.size(); ++i) (contains(truth, static_cast<int>(i)) ? in : out).push_back(rates[i]);
  const auto px = detail::poisson_binomial(in);
  const auto py = detail::poisson_binomial(out);
  if (truth.empty()) return py[0];
  double e = 0;
  for (std::size_t x = 1; x < px.size(); ++x)
    for (std::size_t y = 0; y < py.size(); ++y)
      e += px[x] * py[y] * static_cast<double>(x) / static_cast<double>(truth.size() + y);
  return e;
}

/// Mean expected random-selection Jaccard over every visit of `cohort`.
inline double random_baseline_jaccard(const PatientCohort& cohort, const std::vector<double>& rates) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& p : cohort.patients)
    for (const auto& v : p.visits) {
      sum += expected_random_jaccard(v.medications, rates);
      ++n;
    }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace causalrx::train
