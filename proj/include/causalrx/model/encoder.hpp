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

// Per-visit state encoder.
//
//   base:   h_e = E_kind[e]
//   DSA:    role of e in its homogeneous visit graph -> group weight w_role,
//           w = softmax over non-empty groups of (W . sum_{e in group} h_e + b),
//           h^r_e = w_role(e) * h_e
//   RGCN:   over the complete bipartite graphs D_t x M_{t-1} and P_t x M_{t-1},
//           edges typed by binned effects,
//           h^{l+1}_i = relu(W_0 h_i + sum_r (I + Theta_r) mean_{j in N_r(i)} h_j)
//   output: per entity h_e + h^r_e + h^e_e, summed per set; h_v = [h_D | h_P | h_M]

#include <array>
#include <optional>
#include <tuple>
#include <vector>

#include "causalrx/discovery/visit_graphs.hpp"
#include "causalrx/effects/binning.hpp"
#include "causalrx/model/params.hpp"
#include "causalrx/model/tape.hpp"

namespace causalrx::model {

enum class Role : int { causal = 0, effect = 1, middle = 2, independent = 3 };

enum class DsaMode {
  learned,  // role weights from the DSA softmax
  unit,     // every role weight forced to 1
  off,      // DSA branch removed (no h^r term)
};

inline Var embed(Tape& tape, ModelParameters& params, EntityKind kind, int ordinal) {
  return tape.row(params.embedding(kind), ordinal);
}

inline Role dsa_classify(const discovery::HomogeneousGraph& graph, int ordinal) {
  const int pos = graph.position(ordinal);
  if (pos < 0) throw UsageError("entity " + std::to_string(ordinal) + " is not a node of the visit graph");
  const bool in = graph.in_degree(pos) > 0, out = graph.out_degree(pos) > 0;
  if (out && !in) return Role::causal;
  if (in && !out) return Role::effect;
  if (in && out) return Role::middle;
  return Role::independent;
}

using GroupVars = std::array<std::optional<Var>, 4>;

/// Softmax of W . h_group + b over the non-empty groups; empty groups get no weight.
inline GroupVars dsa_weights(Tape& tape, const GroupVars& group_sums, Param& w, Param& b) {
  std::vector<Var> logits;
  std::vector<std::size_t> slots;
  for (std::size_t j = 0; j < 4; ++j) {
    if (!group_sums[j]) continue;
    logits.push_back(tape.affine_scalar(w, b, *group_sums[j]));
    slots.push_back(j);
  }
  if (logits.empty()) throw UsageError("DSA needs at least one non-empty role group");
  const auto probs = tape.softmax(logits);
  GroupVars out;
  for (std::size_t i = 0; i < slots.size(); ++i) out[slots[i]] = probs[i];
  return out;
}

/// Value-level convenience: returns 4 weights, 0 for empty groups.
inline std::array<double, 4> dsa_weights(const std::array<std::optional<Vec>, 4>& group_sums, const Vec& w, double b) {
  Tape tape;
  Param pw("w", w), pb("b", Mat::Constant(1, 1, b));
  GroupVars sums;
  for (std::size_t j = 0; j < 4; ++j)
    if (group_sums[j]) sums[j] = tape.constant(*group_sums[j]);
  const auto vars = dsa_weights(tape, sums, pw, pb);
  std::array<double, 4> out{};
  for (std::size_t j = 0; j < 4; ++j) out[j] = vars[j] ? tape.scalar(*vars[j]) : 0.0;
  return out;
}

inline Var dsa_apply(Tape& tape, Var embedding, Var weight) { return tape.scale(embedding, weight); }

/// Undirected typed graph for relational convolution.
struct RelationalGraph {
  std::size_t nodes = 0;
  std::vector<std::tuple<int, int, int>> edges;  // (a, b, relation)
};

inline std::vector<Var> rgcn_forward(Tape& tape, const RelationalGraph& graph, std::vector<Var> h,
                                     RgcnParameters& params) {
  const std::size_t relations = params.theta.empty() ? 0 : params.theta.front().size();
  if (params.self.empty()) throw UsageError("RGCN needs at least one layer");
  if (h.size() != graph.nodes) throw UsageError("RGCN node count mismatch");
  // neighbours[node][relation]
  std::vector<std::vector<std::vector<int>>> nbr(graph.nodes, std::vector<std::vector<int>>(relations));
  for (auto [a, b, r] : graph.edges) {
    if (r < 0 || static_cast<std::size_t>(r) >= relations)
      throw UsageError("unknown edge type " + std::to_string(r));
    nbr[static_cast<std::size_t>(a)][static_cast<std::size_t>(r)].push_back(b);
    nbr[static_cast<std::size_t>(b)][static_cast<std::size_t>(r)].push_back(a);
  }
  std::vector<Var> terms;
  std::vector<Var> gathered;
  for (std::size_t l = 0; l < params.self.size(); ++l) {
    std::vector<Var> next(graph.nodes);
    for (std::size_t i = 0; i < graph.nodes; ++i) {
      terms.clear();
      terms.push_back(tape.matvec(params.self[l], h[i]));
      for (std::size_t r = 0; r < relations; ++r) {
        const auto& js = nbr[i][r];
        if (js.empty()) continue;
        gathered.clear();
        for (int j : js) gathered.push_back(h[static_cast<std::size_t>(j)]);
        terms.push_back(tape.residual_matvec(params.theta[l][r], tape.mean(gathered)));
      }
      next[i] = tape.relu(terms.size() == 1 ? terms[0] : tape.sum(terms));
    }
    h = std::move(next);
  }
  return h;
}

struct VisitRepresentation {
  Var h_d, h_p, h_m, h_v;
};

/// Forward trace used to inspect ablation switches.
struct EncoderTrace {
  std::array<std::vector<Role>, 3> roles;       // per kind, per entity in set order
  std::array<std::vector<double>, 3> weights;  // DSA weight per entity (NaN when DSA is off)
  std::vector<std::tuple<int, int, int>> dm_edges;  // (disease, medication, type)
  std::vector<std::tuple<int, int, int>> pm_edges;
};

struct EncoderInputs {
  const OrdinalSet& diseases;
  const OrdinalSet& procedures;
  const OrdinalSet& previous_medications;
  const discovery::VisitGraphs& graphs;
  const effects::EdgeTypeMap& edge_types;
};

namespace detail {

inline Var zeros(Tape& tape, std::size_t dim) { return tape.constant(Vec::Zero(static_cast<Eigen::Index>(dim))); }

/// Complete bipartite graph between treatments and previous medications, typed by
/// the effect bins; kNoEdge pairs are skipped.
inline RelationalGraph bipartite(const OrdinalSet& treatments, const OrdinalSet& meds, const effects::TypeTable& types,
                                 std::vector<std::tuple<int, int, int>>* trace) {
  RelationalGraph g;
  g.nodes = treatments.size() + meds.size();
  for (std::size_t a = 0; a < treatments.size(); ++a)
    for (std::size_t b = 0; b < meds.size(); ++b) {
      const int type = types(static_cast<std::size_t>(treatments[a]), static_cast<std::size_t>(meds[b]));
      if (type == effects::TypeTable::kNoEdge) continue;
      g.edges.emplace_back(static_cast<int>(a), static_cast<int>(treatments.size() + b), type);
      if (trace) trace->emplace_back(treatments[a], meds[b], type);
    }
  return g;
}

}  // namespace detail

inline VisitRepresentation encode_visit_state(Tape& tape, ModelParameters& params, const EncoderInputs& in,
                                              DsaMode dsa, EncoderTrace* trace = nullptr) {
  const std::size_t dim = params.config.dim;
  const std::array<const OrdinalSet*, 3> sets{&in.diseases, &in.procedures, &in.previous_medications};

  std::array<std::vector<Var>, 3> base;
  for (std::size_t k = 0; k < 3; ++k)
    for (int o : *sets[k]) base[k].push_back(embed(tape, params, kAllKinds[k], o));

  // DSA branch.
  std::array<std::vector<std::optional<Var>>, 3> scaled;
  for (std::size_t k = 0; k < 3; ++k) {
    const EntityKind kind = kAllKinds[k];
    const auto& set = *sets[k];
    scaled[k].assign(set.size(), std::nullopt);
    if (set.empty()) continue;
    const auto& graph = in.graphs.of(kind);
    std::vector<Role> roles;
    for (int o : set) roles.push_back(dsa_classify(graph, o));
    if (trace) trace->roles[k] = roles;
    if (dsa == DsaMode::off) {
      if (trace) trace->weights[k].assign(set.size(), std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    if (dsa == DsaMode::unit) {
      for (std::size_t i = 0; i < set.size(); ++i) scaled[k][i] = base[k][i];
      if (trace) trace->weights[k].assign(set.size(), 1.0);
      continue;
    }
    std::array<std::vector<Var>, 4> members;
    for (std::size_t i = 0; i < set.size(); ++i) members[static_cast<std::size_t>(roles[i])].push_back(base[k][i]);
    GroupVars sums;
    for (std::size_t j = 0; j < 4; ++j)
      if (!members[j].empty()) sums[j] = members[j].size() == 1 ? members[j][0] : tape.sum(members[j]);
    const GroupVars w = dsa_weights(tape, sums, params.dsa_w(kind), params.dsa_b(kind));
    for (std::size_t i = 0; i < set.size(); ++i) {
      const Var wi = *w[static_cast<std::size_t>(roles[i])];
      scaled[k][i] = dsa_apply(tape, base[k][i], wi);
      if (trace) trace->weights[k].push_back(tape.scalar(wi));
    }
  }

  // RGCN branch over the two bipartite graphs.
  const auto& meds = in.previous_medications;
  std::array<std::vector<Var>, 3> relational;
  std::vector<Var> med_dm, med_pm;
  for (EntityKind kind : {EntityKind::disease, EntityKind::procedure}) {
    const std::size_t k = static_cast<std::size_t>(kind);
    const auto& treatments = *sets[k];
    if (treatments.empty() && meds.empty()) continue;
    auto graph = detail::bipartite(treatments, meds, in.edge_types.of(kind),
                                   trace ? (kind == EntityKind::disease ? &trace->dm_edges : &trace->pm_edges) : nullptr);
    std::vector<Var> h0 = base[k];
    h0.insert(h0.end(), base[2].begin(), base[2].end());
    auto out = rgcn_forward(tape, graph, std::move(h0), kind == EntityKind::disease ? params.rgcn_dm : params.rgcn_pm);
    relational[k].assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(treatments.size()));
    auto& med_out = kind == EntityKind::disease ? med_dm : med_pm;
    med_out.assign(out.begin() + static_cast<std::ptrdiff_t>(treatments.size()), out.end());
  }
  for (std::size_t i = 0; i < meds.size(); ++i) {
    const Var pair[2] = {med_dm[i], med_pm[i]};
    relational[2].push_back(tape.mean(pair));
  }

  // Residual aggregation and set sums.
  std::array<Var, 3> set_repr;
  for (std::size_t k = 0; k < 3; ++k) {
    if (sets[k]->empty()) {
      set_repr[k] = detail::zeros(tape, dim);
      continue;
    }
    std::vector<Var> parts;
    for (std::size_t i = 0; i < sets[k]->size(); ++i) {
      parts.push_back(base[k][i]);
      if (scaled[k][i]) parts.push_back(*scaled[k][i]);
      parts.push_back(relational[k][i]);
    }
    set_repr[k] = tape.sum(parts);
  }
  return {set_repr[0], set_repr[1], set_repr[2], tape.concat(set_repr)};
}

}  // namespace causalrx::model
