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

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "causalrx/core/cohort.hpp"
#include "causalrx/discovery/visit_graphs.hpp"
#include "causalrx/effects/binning.hpp"
#include "causalrx/model/params.hpp"
#include "causalrx/model/tape.hpp"

namespace causalrx::testing {

inline std::vector<std::string> codes(char prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Cohort with codes d0.., p0.., m0.. and the given patients.
inline PatientCohort make_cohort(std::size_t nd, std::size_t np, std::size_t nm,
                                 std::vector<PatientHistory> patients = {}) {
  PatientCohort c;
  c.diseases = EntityVocab(EntityKind::disease, codes('d', nd));
  c.procedures = EntityVocab(EntityKind::procedure, codes('p', np));
  c.medications = EntityVocab(EntityKind::medication, codes('m', nm));
  c.patients = std::move(patients);
  c.ddi = DdiMatrix(nm);
  return c;
}

inline Visit visit(OrdinalSet d, OrdinalSet p, OrdinalSet m) { return {std::move(d), std::move(p), std::move(m)}; }

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("causalrx_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct GradCheck {
  double worst_rel = 0.0;
  std::string worst_where;
  std::size_t checked = 0;
};

/// Central differences for every entry of every parameter. `loss(true)` must
/// evaluate the loss, zero the gradients and backpropagate; `loss(false)` only
/// evaluates it. rel = |a - n| / max(|a|, |n|, floor).
inline GradCheck check_gradients(const std::vector<model::Param*>& params, const std::function<double(bool)>& loss,
                                 double h = 1e-4, double floor = 1e-6) {
  loss(true);
  std::vector<model::Mat> analytic;
  for (auto* p : params) analytic.push_back(p->grad);
  GradCheck out;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& v = params[k]->value;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double saved = v.data()[i];
      v.data()[i] = saved + h;
      const double up = loss(false);
      v.data()[i] = saved - h;
      const double down = loss(false);
      v.data()[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[k].data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++out.checked;
      if (rel > out.worst_rel) {
        out.worst_rel = rel;
        out.worst_where = params[k]->name + "[" + std::to_string(i) + "] analytic " + std::to_string(a) +
                          " numeric " + std::to_string(numeric);
      }
    }
  }
  return out;
}

/// Small hand-built setting: 4 diseases, 2 procedures, 5 medications, a fixed
/// global graph and seeded random edge types (about one pair in five untyped).
struct TinyWorld {
  PatientCohort cohort;
  std::unique_ptr<discovery::VisitGraphProvider> graphs;
  effects::EdgeTypeMap types;
};

inline TinyWorld tiny_world(std::size_t relations = 5, std::uint64_t seed = 1) {
  TinyWorld w;
  w.cohort = make_cohort(4, 2, 5,
                         {{"a", {visit({0, 1}, {0}, {0, 1}), visit({1, 2}, {}, {1, 3}), visit({3}, {1}, {2})}},
                          {"b", {visit({2}, {0, 1}, {4}), visit({0, 2, 3}, {1}, {0, 1, 4})}},
                          {"c", {visit({1}, {}, {2, 3})}}});
  w.cohort.ddi.add_pair(0, 1);
  w.cohort.ddi.add_pair(2, 3);
  const EntityLayout L = w.cohort.layout();
  discovery::CausalGraph g(L.total());
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(4, 5);
  g.add_edge(6, 7);
  g.add_edge(8, 9);
  w.graphs = std::make_unique<discovery::VisitGraphProvider>(g, L);
  std::mt19937_64 rng(seed);
  w.types.relations = relations;
  auto fill = [&](std::size_t rows) {
    effects::TypeTable t(rows, L.n_medications);
    for (auto& v : t.values)
      v = rng() % 5 == 0 ? effects::TypeTable::kNoEdge : static_cast<int>(rng() % relations);
    return t;
  };
  w.types.dm = fill(L.n_diseases);
  w.types.pm = fill(L.n_procedures);
  return w;
}

inline model::ModelConfig tiny_model(std::size_t dim = 4, std::size_t relations = 5) {
  return {dim, dim, dim, 2, relations};
}

}  // namespace causalrx::testing
