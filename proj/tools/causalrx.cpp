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

// Command-line driver for the causalrx pipeline.
//
//   causalrx synth     --spec SPEC.json --out DIR [--seed N]
//   causalrx discover  --config RUN.json [--seed N] [--out DIR]
//   causalrx estimate  --config RUN.json [--mode M] ...
//   causalrx train     --config RUN.json [--mode M] ...
//   causalrx evaluate  --config RUN.json [--mode M] ...
//   causalrx recommend --config RUN.json [--mode M] [--autoregressive] ...
//   causalrx ablate    --config RUN.json ...
//   causalrx pipeline  --config RUN.json [--mode M] ...
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "causalrx/core/cohort_io.hpp"
#include "causalrx/effects/effects_io.hpp"
#include "causalrx/pipeline/pipeline.hpp"
#include "causalrx/synth/scm.hpp"

namespace {

using namespace causalrx;

struct CommonOptions {
  std::string config;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_mode) {
  cmd->add_option("--config", o.config, "run configuration (JSON)")->required();
  if (with_mode) cmd->add_option("--mode", o.mode, "full, wo_T, wo_P, wo_TP or cooccurrence");
  cmd->add_option("--seed", o.seed, "seed for splitting, initialization and bootstrap");
  cmd->add_option("--out", o.out, "artifact directory");
}

pipeline::RunConfig resolve(const CommonOptions& o) {
  auto cfg = pipeline::load_config(o.config);
  if (o.mode) cfg.mode = *o.mode;
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.artifacts = *o.out;
  return cfg;
}

std::string summary_line(model::Mode mode, const train::MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-13s jaccard %.4f +- %.4f  ddi %.4f  f1 %.4f  prauc %.4f  avg_med %.2f",
                std::string(model::mode_name(mode)).c_str(), r.mean.jaccard, r.std.jaccard, r.mean.ddi_rate, r.mean.f1,
                r.mean.prauc, r.mean.avg_med);
  return buf;
}

int cmd_synth(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed) {
  auto spec = synth::load_spec(spec_path);
  if (seed) spec.seed = *seed;
  const auto cohort = synth::synth_generate(spec);
  const std::filesystem::path dir(out);
  save_cohort(cohort, dir / "cohort.jsonl");
  save_ddi(cohort, dir / "ddi.csv");
  write_file_atomic(dir / "ground_truth.json", synth::to_json(synth::ground_truth(spec)).dump(2) + "\n");
  std::cout << "patients " << cohort.patients.size() << ", visits " << cohort.visit_count() << ", diseases "
            << cohort.diseases.size() << ", procedures " << cohort.procedures.size() << ", medications "
            << cohort.medications.size() << ", ddi pairs " << cohort.ddi.pairs().size() << "\n"
            << "wrote " << (dir / "cohort.jsonl").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causalrx: causal-graph medication recommendation"};
  app.require_subcommand(1);

  std::string spec_path, synth_out;
  std::optional<std::uint64_t> synth_seed;
  auto* synth_cmd = app.add_subcommand("synth", "generate a cohort from a structural causal model spec");
  synth_cmd->add_option("--spec", spec_path, "SCM spec (JSON)")->required();
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "override the spec seed");

  CommonOptions common;
  bool autoregressive = false;
  auto* discover = app.add_subcommand("discover", "learn the causal graph");
  auto* estimate = app.add_subcommand("estimate", "estimate and bin treatment effects");
  auto* train_cmd = app.add_subcommand("train", "fit the recommender");
  auto* evaluate = app.add_subcommand("evaluate", "bootstrap test metrics");
  auto* recommend = app.add_subcommand("recommend", "write per-visit predictions for the test split");
  auto* ablate = app.add_subcommand("ablate", "train and evaluate every model variant");
  auto* run = app.add_subcommand("pipeline", "discover, estimate, train and evaluate");
  add_common(discover, common, false);
  add_common(ablate, common, false);
  for (auto* c : {estimate, train_cmd, evaluate, recommend, run}) add_common(c, common, true);
  recommend->add_flag("--autoregressive", autoregressive, "condition on the model's own previous selections");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(spec_path, synth_out, synth_seed);

    pipeline::Pipeline p(resolve(common), &std::cerr);
    const model::Mode mode = model::parse_mode(p.config().mode);
    if (discover->parsed()) {
      const auto& g = p.graph();
      std::cout << "edges " << g.edge_count() << "\nwrote " << (p.root() / "graph.json").string() << "\n";
    } else if (estimate->parsed()) {
      const auto& art = p.artifacts(mode);
      std::cout << "relations " << art.edge_types.relations << ", boundaries " << art.edge_types.boundaries.size()
                << "\nwrote " << (p.mode_dir(mode) / "edge_types.json").string() << "\n";
    } else if (train_cmd->parsed()) {
      p.model(mode);
      std::cout << "wrote " << (p.mode_dir(mode) / "checkpoint.json").string() << "\n";
    } else if (evaluate->parsed() || run->parsed()) {
      std::cout << summary_line(mode, p.evaluate(mode)) << "\n";
    } else if (recommend->parsed()) {
      std::cout << "wrote " << p.recommend(mode, autoregressive).string() << "\n";
    } else if (ablate->parsed()) {
      nlohmann::ordered_json summary;
      for (model::Mode m : model::kAllModes) {
        const auto report = p.evaluate(m);
        std::cout << summary_line(m, report) << "\n";
        summary[std::string(model::mode_name(m))] = train::to_json(report.mean);
      }
      write_file_atomic(p.root() / "ablation.json", summary.dump(2) + "\n");
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pipeline::exit_code_for(e);
  }
}
