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

// Library walk-through without the pipeline driver: generate a cohort, learn a
// graph, bin treatment effects, fit a small model and print one recommendation.
//
//   quickstart [path/to/benchmark_scm.json]

#include <cstdio>
#include <iostream>

#include "causalrx/causalrx.hpp"

using namespace causalrx;

int main(int argc, char** argv) {
  const std::string spec_path = argc > 1 ? argv[1] : CAUSALRX_DATA_DIR "/benchmark_scm.json";
  auto spec = synth::load_spec(spec_path);
  spec.patients = 200;
  const PatientCohort cohort = synth::synth_generate(spec);
  const CohortSplit split = split_cohort(cohort, {}, 1);

  // Structure and effects are learned from the training split only.
  const auto data = discovery::build_dataset(split.train);
  discovery::SearchConfig search;
  search.forbidden = discovery::treatment_tier_constraint(cohort.layout());
  const auto graph = discovery::greedy_search(data, search);
  std::cout << "learned " << graph.edge_count() << " edges\n";

  discovery::VisitGraphProvider graphs(graph, cohort.layout());
  train::FittedArtifacts art{&graphs,
                             train::edge_types_for_mode(model::Mode::full, graph, data, cohort.layout(), 5),
                             model::Mode::full};

  model::ModelParameters params;
  train::LossConfig loss;
  loss.epochs = 10;
  loss.seed = 1;
  loss.learning_rate = 5e-3;
  const auto fit = train::train(params, {16, 16, 16, 2, 5}, split.train, split.validation, art, loss,
                                [](const train::EpochLog& e) {
                                  std::printf("epoch %zu  loss %.4f  val jaccard %.4f\n", e.epoch, e.loss,
                                              e.validation.jaccard);
                                });
  std::printf("best epoch %zu\n", fit.best_epoch);

  const auto& patient = split.test.patients.front();
  std::cout << model::format_predictions(cohort, patient, model::recommend(patient, params, art.view()));
  return 0;
}
