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

// Synthetic cohorts from a planted structural causal model over binary entity
// variables. Each variable v is Bernoulli(sigmoid(base_v + sum_parents w * x_parent)),
// drawn in topological order; a code is present in the visit iff its variable is 1.
//
// Variables use the unified entity index (diseases, procedures, medications) and are
// named d<i>, p<i>, m<i> in files.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causalrx/core/cohort.hpp"
#include "causalrx/core/io_util.hpp"

namespace causalrx::synth {

struct ScmEdge {
  int parent = 0;
  int child = 0;
  double weight = 0.0;
};

enum class EmptyVisitPolicy {
  resample,  // redraw visits lacking both diseases and procedures (file-loadable cohorts)
  keep,      // keep every draw; exact SCM semantics, in-memory use only
};

struct ScmSpec {
  EntityLayout layout;
  std::vector<ScmEdge> edges;
  std::vector<double> base;  // per unified variable
  std::size_t patients = 100;
  std::size_t visits_min = 1;
  std::size_t visits_max = 1;
  std::uint64_t seed = 0;
  double patient_intercept_sd = 0.0;
  bool allow_medication_edges = false;
  EmptyVisitPolicy empty_visits = EmptyVisitPolicy::resample;
  std::vector<std::pair<int, int>> ddi_pairs;  // medication ordinals
};

struct GroundTruth {
  EntityLayout layout;
  std::vector<ScmEdge> dag;
  // ATE of disease/procedure (row) on medication (column); NaN when not enumerable.
  std::vector<std::vector<double>> dm;
  std::vector<std::vector<double>> pm;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline std::string variable_name(const EntityLayout& layout, int global) {
  static constexpr char prefix[] = {'d', 'p', 'm'};
  return prefix[static_cast<int>(layout.kind_of(global))] + std::to_string(layout.local(global));
}

inline int parse_variable(const EntityLayout& layout, const std::string& name) {
  if (name.size() < 2) throw SpecError("bad variable name '" + name + "'");
  EntityKind kind;
  switch (name[0]) {
    case 'd': kind = EntityKind::disease; break;
    case 'p': kind = EntityKind::procedure; break;
    case 'm': kind = EntityKind::medication; break;
    default: throw SpecError("bad variable name '" + name + "'");
  }
  std::size_t pos = 0;
  int idx = -1;
  try {
    idx = std::stoi(name.substr(1), &pos);
  } catch (const std::exception&) {
    throw SpecError("bad variable name '" + name + "'");
  }
  if (pos != name.size() - 1 || idx < 0 || static_cast<std::size_t>(idx) >= layout.count(kind))
    throw SpecError("variable '" + name + "' out of range");
  return layout.global(kind, idx);
}

/// Kahn topological order with lowest-index-first tie-breaking. Throws SpecError on cycles.
inline std::vector<int> topological_order(std::size_t n, const std::vector<ScmEdge>& edges) {
  std::vector<std::vector<int>> children(n);
  std::vector<int> indeg(n, 0);
  for (const auto& e : edges) {
    children[static_cast<std::size_t>(e.parent)].push_back(e.child);
    ++indeg[static_cast<std::size_t>(e.child)];
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push(static_cast<int>(v));
  std::vector<int> order;
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int c : children[static_cast<std::size_t>(v)])
      if (--indeg[static_cast<std::size_t>(c)] == 0) ready.push(c);
  }
  if (order.size() != n) throw SpecError("SCM graph is cyclic");
  return order;
}

inline void validate(const ScmSpec& spec) {
  const std::size_t n = spec.layout.total();
  if (n == 0) throw SpecError("SCM has no variables");
  if (spec.base.size() != n) throw SpecError("base log-odds size differs from variable count");
  if (spec.visits_min < 1 || spec.visits_max < spec.visits_min) throw SpecError("invalid visits-per-patient range");
  for (const auto& e : spec.edges) {
    if (e.parent < 0 || e.child < 0 || static_cast<std::size_t>(e.parent) >= n ||
        static_cast<std::size_t>(e.child) >= n)
      throw SpecError("edge endpoint out of range");
    if (e.parent == e.child) throw SpecError("self-loop on " + variable_name(spec.layout, e.child));
    const EntityKind pk = spec.layout.kind_of(e.parent), ck = spec.layout.kind_of(e.child);
    const std::string label = variable_name(spec.layout, e.parent) + "->" + variable_name(spec.layout, e.child);
    if (ck == EntityKind::disease && pk != EntityKind::disease)
      throw SpecError("edge " + label + ": diseases may only have disease parents");
    if (ck == EntityKind::procedure && pk == EntityKind::medication)
      throw SpecError("edge " + label + ": procedures may not have medication parents");
    if (ck == EntityKind::medication && pk == EntityKind::medication && !spec.allow_medication_edges)
      throw SpecError("edge " + label + ": medication->medication edges are disabled");
    if (!std::isfinite(e.weight)) throw SpecError("edge " + label + ": non-finite weight");
  }
  topological_order(n, spec.edges);
  for (auto [a, b] : spec.ddi_pairs) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= spec.layout.n_medications ||
        static_cast<std::size_t>(b) >= spec.layout.n_medications || a == b)
      throw SpecError("invalid DDI pair");
  }
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits; independent of the standard
/// library's distribution implementations.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct ParentList {
  std::vector<std::vector<std::pair<int, double>>> of;  // child -> (parent, weight)
};

inline ParentList parent_lists(const ScmSpec& spec) {
  ParentList pl;
  pl.of.resize(spec.layout.total());
  for (const auto& e : spec.edges) pl.of[static_cast<std::size_t>(e.child)].emplace_back(e.parent, e.weight);
  return pl;
}

}  // namespace detail

/// Draws one visit as a full binary assignment over all variables.
inline std::vector<std::uint8_t> sample_assignment(const ScmSpec& spec, const std::vector<int>& order,
                                                   const detail::ParentList& parents,
                                                   const std::vector<double>& intercept, std::mt19937_64& rng) {
  std::vector<std::uint8_t> x(spec.layout.total(), 0);
  for (int v : order) {
    double logit = spec.base[static_cast<std::size_t>(v)] + intercept[static_cast<std::size_t>(v)];
    for (auto [p, w] : parents.of[static_cast<std::size_t>(v)]) logit += w * x[static_cast<std::size_t>(p)];
    x[static_cast<std::size_t>(v)] = detail::unit_uniform(rng) < sigmoid(logit) ? 1 : 0;
  }
  return x;
}

inline PatientCohort synth_generate(const ScmSpec& spec) {
  validate(spec);
  const EntityLayout& L = spec.layout;
  const std::size_t n = L.total();
  const auto order = topological_order(n, spec.edges);
  const auto parents = detail::parent_lists(spec);

  auto names = [&](EntityKind kind) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < L.count(kind); ++i) out.push_back(variable_name(L, L.global(kind, static_cast<int>(i))));
    return out;
  };
  PatientCohort cohort;
  cohort.diseases = EntityVocab(EntityKind::disease, names(EntityKind::disease));
  cohort.procedures = EntityVocab(EntityKind::procedure, names(EntityKind::procedure));
  cohort.medications = EntityVocab(EntityKind::medication, names(EntityKind::medication));
  cohort.ddi = DdiMatrix(L.n_medications);
  for (auto [a, b] : spec.ddi_pairs) cohort.ddi.add_pair(a, b);

  const int width = static_cast<int>(std::to_string(spec.patients).size());
  for (std::size_t p = 0; p < spec.patients; ++p) {
    // Each patient owns an independent stream derived from (seed, patient index).
    std::mt19937_64 rng(detail::splitmix64(spec.seed ^ detail::splitmix64(p + 1)));
    std::vector<double> intercept(n, 0.0);
    if (spec.patient_intercept_sd > 0.0) {
      std::normal_distribution<double> noise(0.0, spec.patient_intercept_sd);
      for (auto& u : intercept) u = noise(rng);
    }
    const std::size_t span = spec.visits_max - spec.visits_min + 1;
    const std::size_t visits = spec.visits_min + static_cast<std::size_t>(detail::unit_uniform(rng) * span);
    PatientHistory history;
    std::string id = std::to_string(p);
    history.id = "P" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
    for (std::size_t t = 0; t < visits; ++t) {
      Visit visit;
      for (int attempt = 0;; ++attempt) {
        const auto x = sample_assignment(spec, order, parents, intercept, rng);
        visit = Visit{};
        for (std::size_t v = 0; v < n; ++v) {
          if (!x[v]) continue;
          const int g = static_cast<int>(v);
          switch (L.kind_of(g)) {
            case EntityKind::disease: visit.diseases.push_back(L.local(g)); break;
            case EntityKind::procedure: visit.procedures.push_back(L.local(g)); break;
            case EntityKind::medication: visit.medications.push_back(L.local(g)); break;
          }
        }
        if (spec.empty_visits == EmptyVisitPolicy::keep || !visit.diseases.empty() || !visit.procedures.empty())
          break;
        if (attempt > 10000) throw SpecError("SCM almost never produces a disease or procedure");
      }
      history.visits.push_back(std::move(visit));
    }
    cohort.patients.push_back(std::move(history));
  }
  return cohort;
}

/// Ancestors of `target` (excluding itself) under the spec's DAG.
inline std::vector<bool> ancestors(const ScmSpec& spec, int target) {
  const auto parents = detail::parent_lists(spec);
  std::vector<bool> seen(spec.layout.total(), false);
  std::vector<int> stack{target};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (auto [p, w] : parents.of[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(p)]) {
        seen[static_cast<std::size_t>(p)] = true;
        stack.push_back(p);
      }
    }
  }
  return seen;
}

inline constexpr std::size_t kMaxEnumerationVariables = 20;

/// E[outcome | do(treatment = value)] by exhaustive enumeration over the outcome's
/// ancestors (treatment clamped, its incoming edges cut).
inline double interventional_mean(const ScmSpec& spec, int treatment, int outcome, int value) {
  const auto anc = ancestors(spec, outcome);
  const auto order = topological_order(spec.layout.total(), spec.edges);
  const auto parents = detail::parent_lists(spec);
  std::vector<int> free_vars;  // topological order
  for (int v : order)
    if (anc[static_cast<std::size_t>(v)] && v != treatment) free_vars.push_back(v);
  if (free_vars.size() > kMaxEnumerationVariables)
    throw CapabilityError("exact ATE needs enumeration over " + std::to_string(free_vars.size()) +
                          " variables (limit " + std::to_string(kMaxEnumerationVariables) + ")");

  std::vector<std::uint8_t> x(spec.layout.total(), 0);
  x[static_cast<std::size_t>(treatment)] = static_cast<std::uint8_t>(value);
  auto logit_of = [&](int v) {
    double l = spec.base[static_cast<std::size_t>(v)];
    for (auto [p, w] : parents.of[static_cast<std::size_t>(v)]) l += w * x[static_cast<std::size_t>(p)];
    return l;
  };
  double total = 0.0;
  const std::uint64_t configs = std::uint64_t{1} << free_vars.size();
  for (std::uint64_t mask = 0; mask < configs; ++mask) {
    double prob = 1.0;
    for (std::size_t k = 0; k < free_vars.size(); ++k) {
      const int v = free_vars[k];
      const std::uint8_t bit = (mask >> k) & 1U;
      x[static_cast<std::size_t>(v)] = bit;
      const double p1 = sigmoid(logit_of(v));
      prob *= bit ? p1 : 1.0 - p1;
      if (prob == 0.0) break;
    }
    if (prob == 0.0) continue;
    total += prob * sigmoid(logit_of(outcome));
  }
  return total;
}

inline double exact_ate(const ScmSpec& spec, int treatment, int outcome) {
  validate(spec);
  if (spec.layout.kind_of(outcome) != EntityKind::medication)
    throw UsageError("ATE outcome must be a medication");
  if (spec.layout.kind_of(treatment) == EntityKind::medication)
    throw UsageError("ATE treatment must be a disease or procedure");
  if (!ancestors(spec, outcome)[static_cast<std::size_t>(treatment)]) return 0.0;
  return interventional_mean(spec, treatment, outcome, 1) - interventional_mean(spec, treatment, outcome, 0);
}

inline GroundTruth ground_truth(const ScmSpec& spec) {
  validate(spec);
  GroundTruth gt;
  gt.layout = spec.layout;
  gt.dag = spec.edges;
  auto table = [&](EntityKind kind) {
    std::vector<std::vector<double>> out(spec.layout.count(kind),
                                         std::vector<double>(spec.layout.n_medications, 0.0));
    for (std::size_t t = 0; t < out.size(); ++t) {
      for (std::size_t m = 0; m < spec.layout.n_medications; ++m) {
        const int tg = spec.layout.global(kind, static_cast<int>(t));
        const int mg = spec.layout.global(EntityKind::medication, static_cast<int>(m));
        try {
          out[t][m] = exact_ate(spec, tg, mg);
        } catch (const CapabilityError&) {
          out[t][m] = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
    return out;
  };
  gt.dm = table(EntityKind::disease);
  gt.pm = table(EntityKind::procedure);
  return gt;
}

// ---- JSON ----------------------------------------------------------------

inline ScmSpec spec_from_json(const nlohmann::json& j) {
  try {
    ScmSpec spec;
    spec.layout = {j.at("diseases").get<std::size_t>(), j.at("procedures").get<std::size_t>(),
                   j.at("medications").get<std::size_t>()};
    const std::size_t n = spec.layout.total();
    spec.base.assign(n, j.value("base_default", 0.0));
    if (j.contains("base")) {
      for (const auto& [name, value] : j["base"].items())
        spec.base[static_cast<std::size_t>(parse_variable(spec.layout, name))] = value.get<double>();
    }
    if (j.contains("edges")) {
      for (const auto& e : j["edges"])
        spec.edges.push_back({parse_variable(spec.layout, e.at("from").get<std::string>()),
                              parse_variable(spec.layout, e.at("to").get<std::string>()),
                              e.at("weight").get<double>()});
    }
    spec.patients = j.value("patients", spec.patients);
    spec.visits_min = j.value("visits_min", spec.visits_min);
    spec.visits_max = j.value("visits_max", spec.visits_max);
    spec.seed = j.value("seed", spec.seed);
    spec.patient_intercept_sd = j.value("patient_intercept_sd", 0.0);
    spec.allow_medication_edges = j.value("allow_medication_edges", false);
    const std::string policy = j.value("empty_visits", std::string("resample"));
    if (policy == "resample")
      spec.empty_visits = EmptyVisitPolicy::resample;
    else if (policy == "keep")
      spec.empty_visits = EmptyVisitPolicy::keep;
    else
      throw SpecError("empty_visits must be 'resample' or 'keep'");
    if (j.contains("ddi_pairs")) {
      for (const auto& pr : j["ddi_pairs"]) {
        int a = parse_variable(spec.layout, pr.at(0).get<std::string>());
        int b = parse_variable(spec.layout, pr.at(1).get<std::string>());
        if (spec.layout.kind_of(a) != EntityKind::medication || spec.layout.kind_of(b) != EntityKind::medication)
          throw SpecError("DDI pairs must name medications");
        spec.ddi_pairs.emplace_back(spec.layout.local(a), spec.layout.local(b));
      }
    }
    validate(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("invalid SCM spec: ") + e.what());
  }
}

inline ScmSpec load_spec(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError("invalid SCM spec JSON: " + std::string(e.what()));
  }
  return spec_from_json(j);
}

inline nlohmann::json to_json(const GroundTruth& gt) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : gt.dag)
    edges.push_back({{"from", variable_name(gt.layout, e.parent)},
                     {"to", variable_name(gt.layout, e.child)},
                     {"weight", e.weight}});
  auto table = [](const std::vector<std::vector<double>>& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t) {
      nlohmann::json row = nlohmann::json::array();
      for (double v : r) row.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  return {{"edges", edges}, {"ate_dm", table(gt.dm)}, {"ate_pm", table(gt.pm)}};
}

}  // namespace causalrx::synth
