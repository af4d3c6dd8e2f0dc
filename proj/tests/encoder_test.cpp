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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <map>

#include "causalrx/model/encoder.hpp"
#include "support.hpp"

namespace causalrx::model {
namespace {

using testing::tiny_model;
using testing::tiny_world;

discovery::HomogeneousGraph chain_plus_isolated() {
  // nodes 10, 11, 12, 13 ; 10 -> 11 -> 12 ; 13 isolated
  return {{10, 11, 12, 13}, {{0, 1}, {1, 2}}};
}

TEST(DsaClassify, RolesFollowDegrees) {
  const auto g = chain_plus_isolated();
  EXPECT_EQ(dsa_classify(g, 10), Role::causal);
  EXPECT_EQ(dsa_classify(g, 11), Role::middle);
  EXPECT_EQ(dsa_classify(g, 12), Role::effect);
  EXPECT_EQ(dsa_classify(g, 13), Role::independent);
  EXPECT_THROW(dsa_classify(g, 14), UsageError);
}

TEST(DsaClassify, FanInAndFanOut) {
  const discovery::HomogeneousGraph g{{0, 1, 2}, {{0, 2}, {1, 2}}};
  EXPECT_EQ(dsa_classify(g, 0), Role::causal);
  EXPECT_EQ(dsa_classify(g, 1), Role::causal);
  EXPECT_EQ(dsa_classify(g, 2), Role::effect);
}

TEST(DsaWeights, SingleGroupGetsWeightOne) {
  std::array<std::optional<Vec>, 4> sums;
  sums[2] = Vec::Constant(3, 0.7);
  const auto w = dsa_weights(sums, Vec::Constant(3, 1.3), -0.2);
  EXPECT_DOUBLE_EQ(w[2], 1.0);
  EXPECT_EQ(w[0], 0.0);
  EXPECT_EQ(w[1], 0.0);
  EXPECT_EQ(w[3], 0.0);
}

TEST(DsaWeights, SoftmaxOverNonEmptyGroups) {
  std::array<std::optional<Vec>, 4> sums;
  sums[0] = (Vec(2) << 1.0, 0.0).finished();
  sums[1] = (Vec(2) << 0.0, 2.0).finished();
  sums[3] = (Vec(2) << -1.0, 1.0).finished();
  const Vec w = (Vec(2) << 0.5, -0.25).finished();
  const double b = 0.1;
  const auto out = dsa_weights(sums, w, b);
  const double l0 = 0.5 + b, l1 = -0.5 + b, l3 = -0.75 + b;
  const double z = std::exp(l0) + std::exp(l1) + std::exp(l3);
  EXPECT_NEAR(out[0], std::exp(l0) / z, 1e-15);
  EXPECT_NEAR(out[1], std::exp(l1) / z, 1e-15);
  EXPECT_EQ(out[2], 0.0);
  EXPECT_NEAR(out[3], std::exp(l3) / z, 1e-15);
  EXPECT_NEAR(out[0] + out[1] + out[3], 1.0, 1e-12);
}

TEST(DsaWeights, ZeroProjectionGivesUniformWeights) {
  std::array<std::optional<Vec>, 4> sums;
  for (auto& s : sums) s = Vec::Random(5);
  for (double w : dsa_weights(sums, Vec::Zero(5), 3.0)) EXPECT_NEAR(w, 0.25, 1e-15);
}

TEST(DsaWeights, AllGroupsEmptyIsAUsageError) {
  EXPECT_THROW(dsa_weights(std::array<std::optional<Vec>, 4>{}, Vec::Zero(2), 0.0), UsageError);
}

TEST(DsaWeights, SumToOneOnRandomInputs) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<std::optional<Vec>, 4> sums;
    bool any = false;
    for (auto& s : sums)
      if (rng() % 2) {
        s = Vec::Random(6) * 10.0;
        any = true;
      }
    if (!any) sums[0] = Vec::Random(6);
    const auto w = dsa_weights(sums, Vec::Random(6), 0.3);
    EXPECT_NEAR(w[0] + w[1] + w[2] + w[3], 1.0, 1e-12);
  }
}

TEST(DsaApply, ScalesTheEmbedding) {
  Tape tape;
  const Var e = tape.constant((Vec(3) << 1, -2, 4).finished());
  const Var w = tape.constant(Vec::Constant(1, 0.25));
  EXPECT_TRUE(tape.value(dsa_apply(tape, e, w)).isApprox((Vec(3) << 0.25, -0.5, 1).finished()));
}

RgcnParameters hand_rgcn() {
  RgcnParameters p;
  p.self.emplace_back("w0", Mat::Identity(2, 2));
  std::vector<Param> layer;
  layer.emplace_back("t0", Mat::Zero(2, 2));
  layer.emplace_back("t1", (Mat(2, 2) << 1, 0, 0, 0).finished());
  p.theta.push_back(std::move(layer));
  return p;
}

TEST(Rgcn, HandEvaluatedSingleLayer) {
  auto p = hand_rgcn();
  Tape tape;
  std::vector<Var> h{tape.constant((Vec(2) << 1, -1).finished()), tape.constant((Vec(2) << 2, 0).finished()),
                     tape.constant((Vec(2) << 0, 3).finished())};
  RelationalGraph g{3, {{0, 1, 0}, {0, 2, 1}}};
  const auto out = rgcn_forward(tape, g, h, p);
  EXPECT_EQ(tape.value(out[0]), (Vec(2) << 3, 2).finished());
  EXPECT_EQ(tape.value(out[1]), (Vec(2) << 3, 0).finished());
  EXPECT_EQ(tape.value(out[2]), (Vec(2) << 2, 2).finished());
}

TEST(Rgcn, NeighbourMeanWithinARelation) {
  auto p = hand_rgcn();
  Tape tape;
  std::vector<Var> h{tape.constant((Vec(2) << 0, 0).finished()), tape.constant((Vec(2) << 2, 4).finished()),
                     tape.constant((Vec(2) << 4, 2).finished())};
  const auto out = rgcn_forward(tape, {3, {{0, 1, 0}, {0, 2, 0}}}, h, p);
  EXPECT_EQ(tape.value(out[0]), (Vec(2) << 3, 3).finished());
}

TEST(Rgcn, DuplicateEdgeMatchesSingleEdge) {
  auto p = hand_rgcn();
  Tape tape;
  std::vector<Var> h{tape.constant((Vec(2) << 1, 1).finished()), tape.constant((Vec(2) << -3, 2).finished())};
  const auto once = rgcn_forward(tape, {2, {{0, 1, 1}}}, h, p);
  const auto twice = rgcn_forward(tape, {2, {{0, 1, 1}, {0, 1, 1}}}, h, p);
  EXPECT_EQ(tape.value(once[0]), tape.value(twice[0]));
  EXPECT_EQ(tape.value(once[1]), tape.value(twice[1]));
}

TEST(Rgcn, IsolatedNodeKeepsOnlySelfTerm) {
  auto p = hand_rgcn();
  Tape tape;
  std::vector<Var> h{tape.constant((Vec(2) << 1, -1).finished())};
  const auto out = rgcn_forward(tape, {1, {}}, h, p);
  EXPECT_EQ(tape.value(out[0]), (Vec(2) << 1, 0).finished());
}

TEST(Rgcn, RejectsUnknownEdgeTypesAndShapeMismatch) {
  auto p = hand_rgcn();
  Tape tape;
  std::vector<Var> h{tape.constant(Vec::Ones(2)), tape.constant(Vec::Ones(2))};
  EXPECT_THROW(rgcn_forward(tape, {2, {{0, 1, 2}}}, h, p), UsageError);
  EXPECT_THROW(rgcn_forward(tape, {2, {{0, 1, -1}}}, h, p), UsageError);
  EXPECT_THROW(rgcn_forward(tape, {3, {}}, h, p), UsageError);
}

TEST(Rgcn, GradientsMatchFiniteDifferences) {
  ModelParameters mp;
  init_parameters(mp, tiny_model(6, 3), {3, 1, 3}, 7);
  Param x("x", Mat::Random(5, 6));  // one input row per node
  const Vec probe = Vec::Random(6);
  const RelationalGraph g{5, {{0, 3, 0}, {0, 4, 2}, {1, 3, 1}, {2, 4, 0}, {1, 4, 1}}};
  std::vector<Param*> params{&x};
  for (auto& w : mp.rgcn_dm.self) params.push_back(&w);
  for (auto& layer : mp.rgcn_dm.theta)
    for (auto& t : layer) params.push_back(&t);
  auto loss = [&](bool backward) {
    Tape tape;
    std::vector<Var> h;
    for (Eigen::Index i = 0; i < 5; ++i) h.push_back(tape.row(x, i));
    const Var s = tape.sum(rgcn_forward(tape, g, h, mp.rgcn_dm));
    const Var total = tape.custom(Vec::Constant(1, tape.value(s).dot(probe)),
                                  [s, probe](Tape& t, const Vec& gr) { t.grad(s) += gr(0) * probe; });
    if (backward) {
      for (auto* p : params) p->zero_grad();
      tape.backward(total);
    }
    return tape.scalar(total);
  };
  const auto r = testing::check_gradients(params, loss);
  EXPECT_LE(r.worst_rel, 1e-5) << r.worst_where;
  EXPECT_GT(r.checked, 100u);
}

struct EncoderSetup {
  testing::TinyWorld world = tiny_world();
  ModelParameters params;
  EncoderSetup() { init_parameters(params, tiny_model(), world.cohort.layout(), 3); }

  VisitRepresentation encode(Tape& tape, const Visit& v, const OrdinalSet& prev, DsaMode mode,
                             EncoderTrace* trace = nullptr, const effects::EdgeTypeMap* types = nullptr) {
    graphs = (*world.graphs)(v, prev);
    return encode_visit_state(tape, params, {v.diseases, v.procedures, prev, graphs, types ? *types : world.types},
                              mode, trace);
  }
  discovery::VisitGraphs graphs;
};

TEST(EncodeVisitState, ConcatenatesThreeSetRepresentations) {
  EncoderSetup s;
  Tape tape;
  const auto& v = s.world.cohort.patients[0].visits[1];
  const auto rep = s.encode(tape, v, s.world.cohort.patients[0].visits[0].medications, DsaMode::learned);
  ASSERT_EQ(tape.value(rep.h_v).size(), 3 * 4);
  EXPECT_EQ(tape.value(rep.h_v).segment(0, 4), tape.value(rep.h_d));
  EXPECT_EQ(tape.value(rep.h_v).segment(4, 4), tape.value(rep.h_p));
  EXPECT_EQ(tape.value(rep.h_v).segment(8, 4), tape.value(rep.h_m));
  EXPECT_TRUE(tape.value(rep.h_p).isZero(0.0));  // no procedures in this visit
  EXPECT_FALSE(tape.value(rep.h_m).isZero(0.0));
}

TEST(EncodeVisitState, FirstVisitHasZeroMedicationSegment) {
  EncoderSetup s;
  Tape tape;
  const auto rep = s.encode(tape, s.world.cohort.patients[0].visits[0], {}, DsaMode::learned);
  EXPECT_TRUE(tape.value(rep.h_m).isZero(0.0));
  EXPECT_FALSE(tape.value(rep.h_d).isZero(0.0));
}

TEST(EncodeVisitState, DefaultWidthIsThreeTimesSixtyFour) {
  auto world = tiny_world();
  ModelParameters params;
  init_parameters(params, {}, world.cohort.layout(), 1);
  Tape tape;
  const auto& v = world.cohort.patients[1].visits[1];
  const auto& prev = world.cohort.patients[1].visits[0].medications;
  const auto graphs = (*world.graphs)(v, prev);
  const auto rep = encode_visit_state(tape, params, {v.diseases, v.procedures, prev, graphs, world.types},
                                      DsaMode::learned);
  EXPECT_EQ(tape.value(rep.h_v).size(), 192);
}

TEST(EncodeVisitState, TraceRolesWeightsAndEdges) {
  EncoderSetup s;
  Tape tape;
  EncoderTrace trace;
  const auto& v = s.world.cohort.patients[0].visits[0];  // d0 -> d1 present
  const OrdinalSet prev{0, 1, 4};                         // m0 -> m1 present
  s.encode(tape, v, prev, DsaMode::learned, &trace);
  EXPECT_EQ(trace.roles[0], (std::vector<Role>{Role::causal, Role::effect}));
  EXPECT_EQ(trace.roles[2], (std::vector<Role>{Role::causal, Role::effect, Role::independent}));
  for (std::size_t k = 0; k < 3; ++k) {
    std::map<Role, double> per_role;
    for (std::size_t i = 0; i < trace.roles[k].size(); ++i) per_role[trace.roles[k][i]] = trace.weights[k][i];
    if (per_role.empty()) continue;
    double sum = 0;
    for (auto [role, w] : per_role) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-6) << "kind " << k;
  }
  std::size_t expected = 0;
  for (int d : v.diseases)
    for (int m : prev) expected += s.world.types.dm(static_cast<std::size_t>(d), static_cast<std::size_t>(m)) !=
                                   effects::TypeTable::kNoEdge;
  EXPECT_EQ(trace.dm_edges.size(), expected);
}

TEST(EncodeVisitState, UnitMinusOffIsTheBaseEmbeddingSum) {
  EncoderSetup s;
  const auto& v = s.world.cohort.patients[1].visits[1];
  const auto& prev = s.world.cohort.patients[1].visits[0].medications;
  Tape t1, t2;
  EncoderTrace off_trace;
  const Vec unit = t1.value(s.encode(t1, v, prev, DsaMode::unit).h_v);
  const Vec off = t2.value(s.encode(t2, v, prev, DsaMode::off, &off_trace).h_v);
  Vec base = Vec::Zero(12);
  for (int d : v.diseases) base.segment(0, 4) += s.params.emb_d.value.row(d).transpose();
  for (int p : v.procedures) base.segment(4, 4) += s.params.emb_p.value.row(p).transpose();
  for (int m : prev) base.segment(8, 4) += s.params.emb_m.value.row(m).transpose();
  EXPECT_TRUE((unit - off).isApprox(base, 1e-12));
  for (const auto& w : off_trace.weights)
    for (double x : w) EXPECT_TRUE(std::isnan(x));
}

TEST(EncodeVisitState, PreviousMedicationsPersonalizeDiseaseRepresentation) {
  EncoderSetup s;
  effects::EdgeTypeMap all_typed = s.world.types;
  std::fill(all_typed.dm.values.begin(), all_typed.dm.values.end(), 1);
  const auto& v = s.world.cohort.patients[0].visits[1];
  Tape t1, t2, t3;
  const Vec a = t1.value(s.encode(t1, v, {0}, DsaMode::learned, nullptr, &all_typed).h_d);
  const Vec b = t2.value(s.encode(t2, v, {2, 3}, DsaMode::learned, nullptr, &all_typed).h_d);
  const Vec c = t3.value(s.encode(t3, v, {0}, DsaMode::learned, nullptr, &all_typed).h_d);
  EXPECT_FALSE(a.isApprox(b, 1e-9));
  EXPECT_EQ(a, c);
}

TEST(EncodeVisitState, InvariantUnderRelabellingEntities) {
  // Swap diseases d1 and d2 consistently in the embeddings, edge types and graph.
  EncoderSetup s;
  const auto& v = s.world.cohort.patients[1].visits[1];  // d0, d2, d3
  const OrdinalSet prev{4};
  Tape t1;
  const Vec original = t1.value(s.encode(t1, v, prev, DsaMode::learned).h_v);

  const EntityLayout L = s.world.cohort.layout();
  discovery::CausalGraph relabelled(L.total());
  relabelled.add_edge(0, 2);
  relabelled.add_edge(2, 1);
  relabelled.add_edge(4, 5);
  relabelled.add_edge(6, 7);
  relabelled.add_edge(8, 9);
  s.world.graphs = std::make_unique<discovery::VisitGraphProvider>(relabelled, L);
  s.params.emb_d.value.row(1).swap(s.params.emb_d.value.row(2));
  for (std::size_t m = 0; m < 5; ++m) std::swap(s.world.types.dm(1, m), s.world.types.dm(2, m));
  const Visit swapped{{0, 1, 3}, v.procedures, v.medications};
  Tape t2;
  const Vec permuted = t2.value(s.encode(t2, swapped, prev, DsaMode::learned).h_v);
  EXPECT_TRUE(original.isApprox(permuted, 1e-12));
}

TEST(EncodeVisitState, GradientsMatchFiniteDifferences) {
  EncoderSetup s;
  const auto& v = s.world.cohort.patients[1].visits[1];
  const auto& prev = s.world.cohort.patients[1].visits[0].medications;
  const Vec probe = Vec::Random(12);
  std::vector<Param*> checked;
  for (Param* p : s.params.all())
    if (p->name.rfind("gru", 0) != 0 && p->name.rfind("head", 0) != 0) checked.push_back(p);
  auto loss = [&](bool backward) {
    Tape tape;
    const auto rep = s.encode(tape, v, prev, DsaMode::learned);
    const Vec hv = tape.value(rep.h_v);
    const Var out = tape.custom(Vec::Constant(1, hv.dot(probe)), [h = rep.h_v, probe](Tape& t, const Vec& g) {
      t.grad(h) += g(0) * probe;
    });
    if (backward) {
      s.params.zero_grad();
      tape.backward(out);
    }
    return tape.scalar(out);
  };
  const auto r = testing::check_gradients(checked, loss);
  EXPECT_LE(r.worst_rel, 1e-5) << r.worst_where;
}

}  // namespace
}  // namespace causalrx::model
