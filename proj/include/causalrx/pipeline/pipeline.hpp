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

// Stage orchestration with on-disk caching.
//
// Layout of the artifact directory:
//   cohort.jsonl ddi.csv ground_truth.json    (only when generated from a spec)
//   graph.json graph.txt                      (learned on the training split)
//   <mode>/edge_types.json types_dm.csv types_pm.csv effects_dm.csv effects_pm.csv
//   <mode>/checkpoint.json training_log.csv metrics.json predictions.jsonl
//
// Each cached artifact records the fingerprint of everything upstream of it and is
// reused only when that fingerprint matches.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "causalrx/core/cohort_io.hpp"
#include "causalrx/core/split.hpp"
#include "causalrx/discovery/dataset.hpp"
#include "causalrx/discovery/graph_io.hpp"
#include "causalrx/discovery/search.hpp"
#include "causalrx/discovery/visit_graphs.hpp"
#include "causalrx/effects/effects_io.hpp"
#include "causalrx/pipeline/config.hpp"
#include "causalrx/synth/scm.hpp"
#include "causalrx/train/trainer.hpp"

namespace causalrx::pipeline {

enum class Stage { load, discover, estimate, train, evaluate, recommend };

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::load: return "load";
    case Stage::discover: return "discover";
    case Stage::estimate: return "estimate";
    case Stage::train: return "train";
    case Stage::evaluate: return "evaluate";
    case Stage::recommend: return "recommend";
  }
  return "?";
}

/// A failure inside a named stage; `exit_code` follows the CLI convention
/// (2 for configuration problems, 1 otherwise).
class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& what, int exit_code)
      : Error("stage '" + std::string(stage_name(stage)) + "' failed: " + what), stage_(stage), exit_code_(exit_code) {}
  Stage stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  Stage stage_;
  int exit_code_;
};

inline int exit_code_for(const std::exception& e) {
  if (auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SpecError*>(&e) ||
      dynamic_cast<const UsageError*>(&e))
    return 2;
  return 1;
}

template <typename F>
auto run_stage(Stage stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), exit_code_for(e));
  }
}

class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg, std::ostream* log = nullptr) : cfg_(std::move(cfg)), log_(log) {
    validate(cfg_);
    root_ = cfg_.artifacts;
  }

  const RunConfig& config() const { return cfg_; }
  std::filesystem::path root() const { return root_; }
  std::filesystem::path mode_dir(model::Mode m) const { return root_ / std::string(model::mode_name(m)); }

  // ---- load ----------------------------------------------------------------------

  const PatientCohort& cohort() {
    if (cohort_) return *cohort_;
    run_stage(Stage::load, [&] {
      if (!cfg_.cohort.empty()) {
        std::string bytes = read_file(cfg_.cohort);
        if (!cfg_.ddi.empty()) bytes += "\n--ddi--\n" + read_file(cfg_.ddi);
        data_hash_ = fnv1a(bytes);
        cohort_ = cfg_.ddi.empty() ? load_cohort(cfg_.cohort) : load_cohort(cfg_.cohort, cfg_.ddi);
      } else {
        data_hash_ = fnv1a("spec:" + read_file(cfg_.synth_spec));
        const auto spec = synth::load_spec(cfg_.synth_spec);
        cohort_ = synth::synth_generate(spec);
        write_file_atomic(root_ / "cohort.jsonl", format_cohort(*cohort_));
        write_file_atomic(root_ / "ddi.csv", format_ddi(*cohort_));
        write_file_atomic(root_ / "ground_truth.json", synth::to_json(synth::ground_truth(spec)).dump(2) + "\n");
      }
      split_ = split_cohort(*cohort_, {}, cfg_.seed);
      train_data_ = discovery::build_dataset(split_->train);
      note("loaded " + std::to_string(cohort_->patients.size()) + " patients, " +
           std::to_string(cohort_->visit_count()) + " visits (train/val/test patients " +
           std::to_string(split_->train.patients.size()) + "/" + std::to_string(split_->validation.patients.size()) +
           "/" + std::to_string(split_->test.patients.size()) + ")");
    });
    return *cohort_;
  }

  const CohortSplit& split() {
    cohort();
    return *split_;
  }

  // ---- discover ------------------------------------------------------------------

  const discovery::CausalGraph& graph() {
    if (graph_) return *graph_;
    cohort();
    run_stage(Stage::discover, [&] {
      const std::string key = discover_key();
      const auto path = root_ / "graph.json";
      if (auto cached = cached_json(path, key)) {
        graph_ = discovery::graph_from_json(*cached, *cohort_);
        note("discover: reusing " + path.string());
        return;
      }
      const auto result = discovery::greedy_search_with_log(*train_data_, search_config(cfg_, cohort_->layout()));
      graph_ = result.graph;
      auto j = discovery::graph_to_json(*graph_, *cohort_);
      j["stage_hash"] = key;
      j["config_hash"] = config_hash(cfg_);
      j["score"] = result.score;
      j["moves"] = result.moves.size();
      write_file_atomic(path, j.dump(2) + "\n");
      write_file_atomic(root_ / "graph.txt", discovery::format_graph_text(*graph_, *cohort_));
      note("discover: " + std::to_string(graph_->edge_count()) + " edges after " + std::to_string(result.moves.size()) +
           " moves");
    });
    return *graph_;
  }

  // ---- estimate ------------------------------------------------------------------

  const train::FittedArtifacts& artifacts(model::Mode mode) {
    auto it = fitted_.find(mode);
    if (it != fitted_.end()) return it->second;
    graph();
    return run_stage(Stage::estimate, [&]() -> const train::FittedArtifacts& {
      const std::string key = estimate_key(mode);
      const auto dir = mode_dir(mode);
      const auto path = dir / "edge_types.json";
      train::FittedArtifacts art;
      art.mode = mode;
      art.graphs = provider();
      if (auto cached = cached_json(path, key)) {
        art.edge_types = edge_types_from_json(*cached);
        note("estimate: reusing " + path.string());
      } else {
        const auto layout = cohort_->layout();
        std::optional<effects::EffectMatrix> matrix;
        if (mode == model::Mode::cooccurrence)
          matrix = effects::cooccurrence_matrices(*train_data_, layout);
        else if (!model::uses_presence_types(mode))
          matrix = effects::build_effect_matrices(*graph_, *train_data_, layout);
        art.edge_types = matrix ? effects::bin_effects(*matrix, cfg_.relations)
                                : effects::presence_edge_types(*train_data_, layout, cfg_.relations);
        if (matrix) {
          write_file_atomic(dir / "effects_dm.csv",
                            effects::format_table_csv(matrix->dm, cohort_->diseases, cohort_->medications));
          write_file_atomic(dir / "effects_pm.csv",
                            effects::format_table_csv(matrix->pm, cohort_->procedures, cohort_->medications));
        }
        write_file_atomic(dir / "types_dm.csv",
                          effects::format_types_csv(art.edge_types.dm, cohort_->diseases, cohort_->medications));
        write_file_atomic(dir / "types_pm.csv",
                          effects::format_types_csv(art.edge_types.pm, cohort_->procedures, cohort_->medications));
        auto j = edge_types_to_json(art.edge_types);
        j["stage_hash"] = key;
        j["config_hash"] = config_hash(with_mode(mode));
        write_file_atomic(path, j.dump(2) + "\n");
        note("estimate[" + std::string(model::mode_name(mode)) + "]: " +
             std::to_string(art.edge_types.boundaries.size()) + " bin boundaries");
      }
      return fitted_.emplace(mode, std::move(art)).first->second;
    });
  }

  // ---- train ---------------------------------------------------------------------

  model::ModelParameters& model(model::Mode mode) {
    auto it = models_.find(mode);
    if (it != models_.end()) return *it->second;
    const auto& art = artifacts(mode);
    return run_stage(Stage::train, [&]() -> model::ModelParameters& {
      const std::string key = train_key(mode);
      const auto dir = mode_dir(mode);
      const auto path = dir / "checkpoint.json";
      auto params = std::make_unique<model::ModelParameters>();
      if (auto cached = cached_json(path, key)) {
        model::checkpoint_from_json(*params, *cached);
        note("train: reusing " + path.string());
      } else {
        const auto result = train::train(*params, model_config(cfg_), split_->train, split_->validation, art,
                                         loss_config(cfg_), [&](const train::EpochLog& e) {
                                           note("train[" + std::string(model::mode_name(mode)) + "] epoch " +
                                                std::to_string(e.epoch) + " loss " + effects::format_real(e.loss) +
                                                " val_jaccard " + effects::format_real(e.validation.jaccard));
                                         });
        auto j = model::checkpoint_to_json(*params, config_hash(with_mode(mode)));
        j["stage_hash"] = key;
        j["best_epoch"] = result.best_epoch;
        write_file_atomic(path, j.dump() + "\n");
        write_file_atomic(dir / "training_log.csv", train::format_training_log(result.log));
      }
      return *models_.emplace(mode, std::move(params)).first->second;
    });
  }

  // ---- evaluate ------------------------------------------------------------------

  train::MetricsReport evaluate(model::Mode mode) {
    auto& params = model(mode);
    const auto& art = artifacts(mode);
    return run_stage(Stage::evaluate, [&] {
      train::EvaluationConfig ec{cfg_.bootstrap_rounds, cfg_.bootstrap_fraction, cfg_.seed, cfg_.delta};
      const auto report = train::evaluate(params, split_->test, art, ec);
      const double baseline = train::random_baseline_jaccard(split_->test, train::marginal_rates(split_->train));
      nlohmann::ordered_json j;
      j["format"] = "causalrx-metrics";
      j["version"] = 1;
      j["config_hash"] = config_hash(with_mode(mode));
      j["mode"] = model::mode_name(mode);
      j["seed"] = cfg_.seed;
      j["test_patients"] = split_->test.patients.size();
      j["test_visits"] = split_->test.visit_count();
      j["random_baseline_jaccard"] = baseline;
      j["bootstrap"] = {{"rounds", cfg_.bootstrap_rounds}, {"fraction", cfg_.bootstrap_fraction}};
      j["metrics"] = train::to_json(report);
      write_file_atomic(mode_dir(mode) / "metrics.json", j.dump(2) + "\n");
      note("evaluate[" + std::string(model::mode_name(mode)) + "]: jaccard " + effects::format_real(report.mean.jaccard) +
           " (random baseline " + effects::format_real(baseline) + ")");
      return report;
    });
  }

  // ---- recommend -----------------------------------------------------------------

  std::filesystem::path recommend(model::Mode mode, bool autoregressive) {
    auto& params = model(mode);
    const auto& art = artifacts(mode);
    return run_stage(Stage::recommend, [&] {
      std::string out;
      for (const auto& p : split_->test.patients)
        out += model::format_predictions(*cohort_, p,
                                         model::recommend(p, params, art.view(), {cfg_.delta, autoregressive}));
      const auto path = mode_dir(mode) / "predictions.jsonl";
      write_file_atomic(path, out);
      note("recommend[" + std::string(model::mode_name(mode)) + "]: wrote " + path.string());
      return path;
    });
  }

  // ---- serialization of edge types -------------------------------------------------

  static nlohmann::json edge_types_to_json(const effects::EdgeTypeMap& m) {
    return {{"relations", m.relations},
            {"boundaries", m.boundaries},
            {"dm", {{"rows", m.dm.rows}, {"cols", m.dm.cols}, {"types", m.dm.values}}},
            {"pm", {{"rows", m.pm.rows}, {"cols", m.pm.cols}, {"types", m.pm.values}}}};
  }

  static effects::EdgeTypeMap edge_types_from_json(const nlohmann::json& j) {
    try {
      effects::EdgeTypeMap m;
      m.relations = j.at("relations");
      m.boundaries = j.at("boundaries").get<std::vector<double>>();
      auto table = [](const nlohmann::json& t) {
        effects::TypeTable out(t.at("rows"), t.at("cols"));
        out.values = t.at("types").get<std::vector<int>>();
        if (out.values.size() != out.rows * out.cols) throw ParseError("edge type table has the wrong size");
        return out;
      };
      m.dm = table(j.at("dm"));
      m.pm = table(j.at("pm"));
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid edge type JSON: ") + e.what());
    }
  }

 private:
  void note(const std::string& msg) {
    if (log_) *log_ << msg << "\n";
  }

  RunConfig with_mode(model::Mode m) const {
    RunConfig c = cfg_;
    c.mode = std::string(model::mode_name(m));
    return c;
  }

  static std::string chain(const std::string& upstream, const nlohmann::ordered_json& fields) {
    return hex64(fnv1a(fields.dump(), fnv1a(upstream)));
  }

  std::string discover_key() const {
    return chain(hex64(data_hash_), {{"stage", "discover"},
                                     {"seed", cfg_.seed},
                                     {"max_parents", cfg_.max_parents},
                                     {"prescreen_k", cfg_.prescreen_k},
                                     {"tier_constraint", cfg_.tier_constraint}});
  }

  std::string estimate_key(model::Mode m) const {
    return chain(discover_key(), {{"stage", "estimate"}, {"mode", model::mode_name(m)}, {"relations", cfg_.relations}});
  }

  std::string train_key(model::Mode m) const {
    auto c = to_json(with_mode(m));
    for (const char* k : {"cohort", "ddi", "synth_spec", "artifacts", "bootstrap_rounds", "bootstrap_fraction"})
      c.erase(k);
    return chain(estimate_key(m), {{"stage", "train"}, {"config", c}});
  }

  static std::optional<nlohmann::json> cached_json(const std::filesystem::path& path, const std::string& key) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
      auto j = nlohmann::json::parse(read_file(path));
      if (j.value("stage_hash", std::string()) == key) return j;
    } catch (const nlohmann::json::exception&) {
    }
    return std::nullopt;
  }

  discovery::VisitGraphProvider* provider() {
    if (!provider_) {
      const auto layout = cohort_->layout();
      provider_ = cfg_.rediscover_per_visit
                      ? std::make_unique<discovery::VisitGraphProvider>(*graph_, layout, *train_data_,
                                                                        search_config(cfg_, layout))
                      : std::make_unique<discovery::VisitGraphProvider>(*graph_, layout);
    }
    return provider_.get();
  }

  RunConfig cfg_;
  std::ostream* log_;
  std::filesystem::path root_;
  std::uint64_t data_hash_ = 0;
  std::optional<PatientCohort> cohort_;
  std::optional<CohortSplit> split_;
  std::optional<discovery::BinaryDataset> train_data_;
  std::optional<discovery::CausalGraph> graph_;
  std::unique_ptr<discovery::VisitGraphProvider> provider_;
  std::map<model::Mode, train::FittedArtifacts> fitted_;
  std::map<model::Mode, std::unique_ptr<model::ModelParameters>> models_;
};

}  // namespace causalrx::pipeline
