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
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "causalrx/core/split.hpp"
#include "causalrx/discovery/dataset.hpp"
#include "causalrx/effects/binning.hpp"
#include "causalrx/effects/effects.hpp"
#include "causalrx/effects/effects_io.hpp"
#include "causalrx/model/recommender.hpp"
#include "causalrx/train/losses.hpp"
#include "causalrx/train/metrics.hpp"

namespace causalrx::train {

using model::Mode;

struct LossConfig {
  double beta = 0.95;
  double gamma = 0.06;   // DDI acceptance rate
  double kp = 0.05;      // correction factor
  double delta = 0.5;    // selection threshold
  double learning_rate = 5e-4;
  double weight_decay = 0.005;
  double dropout = 0.5;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;

  void validate() const {
    auto open_unit = [](double v, const char* name) {
      if (!(v > 0.0 && v < 1.0)) throw ConfigError(std::string(name) + " must lie in (0, 1)");
    };
    open_unit(beta, "beta");
    open_unit(gamma, "gamma");
    open_unit(kp, "kp");
    open_unit(delta, "delta");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  }
};

/// Edge types the encoder uses under a given mode, built from training data only.
inline effects::EdgeTypeMap edge_types_for_mode(Mode mode, const discovery::CausalGraph& graph,
                                                const discovery::BinaryDataset& data, const EntityLayout& layout,
                                                std::size_t relations) {
  switch (mode) {
    case Mode::wo_T:
    case Mode::wo_TP: return effects::presence_edge_types(data, layout, relations);
    case Mode::cooccurrence: return effects::bin_effects(effects::cooccurrence_matrices(data, layout), relations);
    default: return effects::bin_effects(effects::build_effect_matrices(graph, data, layout), relations);
  }
}

/// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(double lr, double weight_decay, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8)
      : lr_(lr), wd_(weight_decay), b1_(b1), b2_(b2), eps_(eps) {}

  void step(const std::vector<model::Param*>& params) {
    if (m_.empty()) {
      for (auto* p : params) {
        m_.push_back(model::Mat::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(model::Mat::Zero(p->value.rows(), p->value.cols()));
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * p.grad;
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * p.grad.cwiseProduct(p.grad);
      p.value *= 1.0 - lr_ * wd_;
      p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    }
  }

 private:
  double lr_, wd_, b1_, b2_, eps_;
  std::vector<model::Mat> m_, v_;
  long long t_ = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0, bce = 0, multi = 0, ddi = 0, alpha = 0;  // means over training steps
  MetricSet validation;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_validation_jaccard = -1.0;
};

/// Everything a fitted model needs at inference besides its parameters.
struct FittedArtifacts {
  discovery::VisitGraphProvider* graphs = nullptr;
  effects::EdgeTypeMap edge_types;
  Mode mode = Mode::full;

  model::RecommenderArtifacts view() const { return {graphs, &edge_types, mode}; }
};

inline std::vector<ScoredVisit> score_cohort(const PatientCohort& cohort, model::ModelParameters& params,
                                             const FittedArtifacts& art, double delta) {
  std::vector<ScoredVisit> out;
  for (const auto& p : cohort.patients) {
    auto preds = model::recommend(p, params, art.view(), {delta, false});
    for (std::size_t t = 0; t < preds.size(); ++t)
      out.push_back({std::move(preds[t].scores), std::move(preds[t].selected), p.visits[t].medications});
  }
  return out;
}

inline std::string format_training_log(const std::vector<EpochLog>& log) {
  using effects::format_real;
  std::string out =
      "epoch,loss,l_bce,l_multi,l_ddi,alpha,val_jaccard,val_ddi_rate,val_f1,val_prauc,val_avg_med\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch);
    for (double v : {e.loss, e.bce, e.multi, e.ddi, e.alpha, e.validation.jaccard, e.validation.ddi_rate,
                     e.validation.f1, e.validation.prauc, e.validation.avg_med})
      out += "," + format_real(v);
    out += "\n";
  }
  return out;
}

/// One optimization step per visit, in a seed-shuffled patient order each epoch.
/// Parameters are (re)initialized from `cfg.seed`; on return they hold the weights
/// of the epoch with the best validation Jaccard.
inline TrainResult train(model::ModelParameters& params, const model::ModelConfig& model_cfg,
                         const PatientCohort& train_set, const PatientCohort& validation, const FittedArtifacts& art,
                         const LossConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch = {}) {
  cfg.validate();
  if (!art.graphs) throw ConfigError("training needs a causal graph");
  if (art.edge_types.relations != model_cfg.relations)
    throw ConfigError("edge type count does not match the model's relation count");
  model::init_parameters(params, model_cfg, train_set.layout(), cfg.seed);
  const auto all = params.all();
  AdamW opt(cfg.learning_rate, cfg.weight_decay);
  std::mt19937_64 rng(cfg.seed ^ 0x5eedf00dULL);

  std::vector<std::vector<model::PreparedVisit>> prepared;
  prepared.reserve(train_set.patients.size());
  for (const auto& p : train_set.patients) prepared.push_back(model::prepare_history(p, *art.graphs));

  model::ForwardOptions fwd;
  fwd.dsa = model::dsa_mode(art.mode);
  fwd.dropout = cfg.dropout;
  fwd.rng = &rng;

  TrainResult result;
  std::vector<model::Mat> best;
  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n_med = train_set.medications.size();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log;
    log.epoch = epoch;
    std::size_t steps = 0;
    for (std::size_t pi : order) {
      const auto& visits = prepared[pi];
      for (std::size_t t = 0; t < visits.size(); ++t) {
        model::Tape tape;
        const model::Var scores = model::forward_prefix(tape, params, visits, t, art.edge_types, fwd);
        const Vec truth = truth_vector(visits[t].visit->medications, n_med);
        const auto selected = model::threshold_select(tape.value(scores), cfg.delta);
        const double alpha = compute_alpha(set_ddi_rate(selected, train_set.ddi), cfg.gamma, cfg.kp);
        const auto terms = combine_loss(tape, scores, truth, train_set.ddi, alpha, cfg.beta);
        const double loss = tape.scalar(terms.total);
        if (!std::isfinite(loss))
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", patient '" +
                                train_set.patients[pi].id + "', visit " + std::to_string(t) +
                                " (bce=" + std::to_string(terms.bce) + ", multi=" + std::to_string(terms.multi) +
                                ", ddi=" + std::to_string(terms.ddi) + ")");
        params.zero_grad();
        tape.backward(terms.total);
        opt.step(all);
        log.loss += loss;
        log.bce += terms.bce;
        log.multi += terms.multi;
        log.ddi += terms.ddi;
        log.alpha += alpha;
        ++steps;
      }
    }
    if (steps > 0) {
      const auto s = static_cast<double>(steps);
      log.loss /= s;
      log.bce /= s;
      log.multi /= s;
      log.ddi /= s;
      log.alpha /= s;
    }
    log.validation = compute_metrics(score_cohort(validation, params, art, cfg.delta), validation.ddi);
    if (log.validation.jaccard > result.best_validation_jaccard) {
      result.best_validation_jaccard = log.validation.jaccard;
      result.best_epoch = epoch;
      best.clear();
      for (auto* p : all) best.push_back(p->value);
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  for (std::size_t i = 0; i < best.size(); ++i) all[i]->value = best[i];
  params.zero_grad();
  return result;
}

struct EvaluationConfig {
  std::size_t rounds = 10;
  double fraction = 0.8;
  std::uint64_t seed = 0;
  double delta = 0.5;
};

/// Metrics per bootstrap round over test patients, plus mean and sample std.
inline MetricsReport evaluate(model::ModelParameters& params, const PatientCohort& test, const FittedArtifacts& art,
                              const EvaluationConfig& cfg) {
  std::vector<std::vector<ScoredVisit>> per_patient;
  per_patient.reserve(test.patients.size());
  for (const auto& p : test.patients) per_patient.push_back(score_cohort(test.with_patients({p}), params, art, cfg.delta));
  std::vector<MetricSet> rounds;
  for (const auto& idx : bootstrap_indices(test.patients.size(), cfg.rounds, cfg.fraction, cfg.seed)) {
    std::vector<ScoredVisit> visits;
    for (std::size_t i : idx) visits.insert(visits.end(), per_patient[i].begin(), per_patient[i].end());
    rounds.push_back(compute_metrics(visits, test.ddi));
  }
  return summarize(std::move(rounds));
}

}  // namespace causalrx::train
