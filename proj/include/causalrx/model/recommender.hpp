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

#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "causalrx/discovery/visit_graphs.hpp"
#include "causalrx/effects/binning.hpp"
#include "causalrx/model/encoder.hpp"
#include "causalrx/model/params.hpp"

namespace causalrx::model {

/// Model variant. The ablations switch exactly one mechanism each:
///   wo_T          edge types collapse to co-occurrence presence
///   wo_P          every DSA weight is forced to 1
///   wo_TP         both of the above
///   cooccurrence  co-occurrence-rate edge types and no DSA branch
enum class Mode { full, wo_T, wo_P, wo_TP, cooccurrence };

inline constexpr std::array<Mode, 5> kAllModes = {Mode::full, Mode::wo_T, Mode::wo_P, Mode::wo_TP, Mode::cooccurrence};

inline std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::full: return "full";
    case Mode::wo_T: return "wo_T";
    case Mode::wo_P: return "wo_P";
    case Mode::wo_TP: return "wo_TP";
    case Mode::cooccurrence: return "cooccurrence";
  }
  return "?";
}

inline Mode parse_mode(std::string_view s) {
  for (Mode m : kAllModes)
    if (mode_name(m) == s) return m;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected full, wo_T, wo_P, wo_TP or cooccurrence)");
}

inline DsaMode dsa_mode(Mode m) {
  switch (m) {
    case Mode::wo_P:
    case Mode::wo_TP: return DsaMode::unit;
    case Mode::cooccurrence: return DsaMode::off;
    default: return DsaMode::learned;
  }
}

inline bool uses_presence_types(Mode m) { return m == Mode::wo_T || m == Mode::wo_TP; }

// ---- recurrent state and scoring ---------------------------------------------

/// PyTorch-form GRU:
///   r = sig(W_ir x + b_ir + W_hr h + b_hr)
///   z = sig(W_iz x + b_iz + W_hz h + b_hz)
///   n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
///   h' = (1 - z) * n + z * h
inline Var gru_step(Tape& tape, GruParameters& g, Var h, Var x) {
  if (tape.value(x).size() != g.w_ir.value.cols())
    throw UsageError("GRU input has length " + std::to_string(tape.value(x).size()) + ", expected " +
                     std::to_string(g.w_ir.value.cols()));
  if (tape.value(h).size() != g.w_hr.value.cols())
    throw UsageError("GRU state has length " + std::to_string(tape.value(h).size()) + ", expected " +
                     std::to_string(g.w_hr.value.cols()));
  auto gate = [&](Param& wi, Param& bi, Param& wh, Param& bh) {
    return tape.sigmoid(tape.add(tape.add_bias(tape.matvec(wi, x), bi), tape.add_bias(tape.matvec(wh, h), bh)));
  };
  const Var r = gate(g.w_ir, g.b_ir, g.w_hr, g.b_hr);
  const Var z = gate(g.w_iz, g.b_iz, g.w_hz, g.b_hz);
  const Var hn = tape.add_bias(tape.matvec(g.w_hn, h), g.b_hn);
  const Var n = tape.tanh(tape.add(tape.add_bias(tape.matvec(g.w_in, x), g.b_in), tape.mul(r, hn)));
  return tape.add(tape.mul(tape.one_minus(z), n), tape.mul(z, h));
}

inline Vec gru_step(GruParameters& g, const Vec& h, const Vec& x) {
  Tape tape;
  return tape.value(gru_step(tape, g, tape.constant(h), tape.constant(x)));
}

/// sigmoid(W2 relu(W1 h + b1) + b2)
inline Var score_medications(Tape& tape, HeadParameters& head, Var state) {
  const Var hidden = tape.relu(tape.add_bias(tape.matvec(head.w1, state), head.b1));
  return tape.sigmoid(tape.add_bias(tape.matvec(head.w2, hidden), head.b2));
}

inline Vec score_medications(HeadParameters& head, const Vec& state) {
  Tape tape;
  return tape.value(score_medications(tape, head, tape.constant(state)));
}

inline OrdinalSet threshold_select(const Vec& scores, double delta) {
  OrdinalSet out;
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    if (scores(i) >= delta) out.push_back(static_cast<int>(i));
  return out;
}

// ---- patient-level forward ----------------------------------------------------

/// Relation artifacts a fitted model needs besides its parameters.
struct RecommenderArtifacts {
  discovery::VisitGraphProvider* graphs = nullptr;
  const effects::EdgeTypeMap* edge_types = nullptr;
  Mode mode = Mode::full;
};

/// Visit inputs that do not depend on parameters.
struct PreparedVisit {
  const Visit* visit = nullptr;
  OrdinalSet previous_medications;
  discovery::VisitGraphs graphs;
};

inline std::vector<PreparedVisit> prepare_history(const PatientHistory& history, discovery::VisitGraphProvider& graphs) {
  std::vector<PreparedVisit> out;
  out.reserve(history.visits.size());
  const OrdinalSet none;
  for (std::size_t t = 0; t < history.visits.size(); ++t) {
    const OrdinalSet& prev = t == 0 ? none : history.visits[t - 1].medications;
    out.push_back({&history.visits[t], prev, graphs(history.visits[t], prev)});
  }
  return out;
}

struct ForwardOptions {
  DsaMode dsa = DsaMode::learned;
  double dropout = 0.0;             // applied to h_v when > 0
  std::mt19937_64* rng = nullptr;   // dropout masks; required when dropout > 0
  std::vector<EncoderTrace>* trace = nullptr;
};

/// Runs visits[0..last] through encoder and GRU and returns the score vector of `last`.
inline Var forward_prefix(Tape& tape, ModelParameters& params, const std::vector<PreparedVisit>& visits, std::size_t last,
                          const effects::EdgeTypeMap& edge_types, const ForwardOptions& opt) {
  if (last >= visits.size()) throw UsageError("visit index out of range");
  Var h = tape.constant(Vec::Zero(static_cast<Eigen::Index>(params.config.hidden)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t t = 0; t <= last; ++t) {
    const auto& pv = visits[t];
    EncoderTrace* tr = nullptr;
    if (opt.trace) tr = &opt.trace->emplace_back();
    const auto rep = encode_visit_state(
        tape, params, {pv.visit->diseases, pv.visit->procedures, pv.previous_medications, pv.graphs, edge_types}, opt.dsa,
        tr);
    Var x = rep.h_v;
    if (opt.dropout > 0.0) {
      if (!opt.rng) throw UsageError("dropout needs a random source");
      Vec m(tape.value(x).size());
      const double keep = 1.0 - opt.dropout;
      for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = unit(*opt.rng) < keep ? 1.0 / keep : 0.0;
      x = tape.mask(x, m);
    }
    h = gru_step(tape, params.gru, h, x);
  }
  return score_medications(tape, params.head, h);
}

struct VisitPrediction {
  Vec scores;
  OrdinalSet selected;
};

struct RecommendOptions {
  double delta = 0.5;
  bool autoregressive = false;  // feed back the model's own previous selections
};

/// Per-visit scores and selections for one patient. Teacher-forced by default: each
/// visit conditions on the recorded medications of the visit before it.
inline std::vector<VisitPrediction> recommend(const PatientHistory& history, ModelParameters& params,
                                              const RecommenderArtifacts& art, const RecommendOptions& opt = {}) {
  if (!art.graphs || !art.edge_types) throw ConfigError("recommend needs a causal graph and edge types");
  std::vector<VisitPrediction> out;
  Tape tape;
  Var h = tape.constant(Vec::Zero(static_cast<Eigen::Index>(params.config.hidden)));
  const DsaMode dsa = dsa_mode(art.mode);
  OrdinalSet prev;
  for (std::size_t t = 0; t < history.visits.size(); ++t) {
    const Visit& v = history.visits[t];
    const auto graphs = (*art.graphs)(v, prev);
    const auto rep = encode_visit_state(tape, params, {v.diseases, v.procedures, prev, graphs, *art.edge_types}, dsa);
    h = gru_step(tape, params.gru, h, rep.h_v);
    Vec scores = tape.value(score_medications(tape, params.head, h));
    OrdinalSet selected = threshold_select(scores, opt.delta);
    prev = opt.autoregressive ? selected : v.medications;
    out.push_back({std::move(scores), std::move(selected)});
  }
  return out;
}

/// One JSON-Lines record per visit.
inline std::string format_predictions(const PatientCohort& cohort, const PatientHistory& history,
                                      const std::vector<VisitPrediction>& preds) {
  const auto& meds = cohort.medications;
  auto codes = [&](const OrdinalSet& s) {
    std::vector<std::string> out;
    for (int o : s) out.push_back(meds.code(o));
    return out;
  };
  std::string out;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    std::vector<double> scores(preds[t].scores.data(), preds[t].scores.data() + preds[t].scores.size());
    nlohmann::json j = {{"patient_id", history.id},
                        {"visit", t},
                        {"scores", scores},
                        {"selected", codes(preds[t].selected)},
                        {"truth", codes(history.visits[t].medications)}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace causalrx::model
