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

#include "causalrx/core/cohort.hpp"
#include "causalrx/core/cohort_io.hpp"
#include "causalrx/core/error.hpp"
#include "causalrx/core/split.hpp"
#include "causalrx/discovery/dataset.hpp"
#include "causalrx/discovery/graph.hpp"
#include "causalrx/discovery/graph_io.hpp"
#include "causalrx/discovery/score.hpp"
#include "causalrx/discovery/search.hpp"
#include "causalrx/discovery/visit_graphs.hpp"
#include "causalrx/effects/binning.hpp"
#include "causalrx/effects/effects.hpp"
#include "causalrx/effects/effects_io.hpp"
#include "causalrx/model/encoder.hpp"
#include "causalrx/model/params.hpp"
#include "causalrx/model/recommender.hpp"
#include "causalrx/model/tape.hpp"
#include "causalrx/pipeline/config.hpp"
#include "causalrx/pipeline/pipeline.hpp"
#include "causalrx/synth/scm.hpp"
#include "causalrx/train/losses.hpp"
#include "causalrx/train/metrics.hpp"
#include "causalrx/train/trainer.hpp"
