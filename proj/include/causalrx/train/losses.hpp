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
#include <vector>

#include "causalrx/core/cohort.hpp"
#include "causalrx/model/tape.hpp"

namespace causalrx::train {

using model::Tape;
using model::Var;
using model::Vec;

inline constexpr double kScoreClamp = 1e-7;

/// Ground truth as a 0/1 vector of length |M|.
inline Vec truth_vector(const OrdinalSet& meds, std::size_t n) {
  Vec m = Vec::Zero(static_cast<Eigen::Index>(n));
  for (int o : meds) m(o) = 1.0;
  return m;
}

inline double loss_bce(const Vec& s, const Vec& m) {
  double l = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double p = std::clamp(s(i), kScoreClamp, 1.0 - kScoreClamp);
    l -= m(i) > 0.5 ? std::log(p) : std::log(1.0 - p);
  }
  return l;
}

inline double loss_multi(const Vec& s, const Vec& m) {
  double l = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (m(i) < 0.5) continue;
    for (Eigen::Index j = 0; j < s.size(); ++j)
      if (m(j) < 0.5) l += std::max(0.0, 1.0 - (s(i) - s(j)));
  }
  return s.size() == 0 ? 0.0 : l / static_cast<double>(s.size());
}

/// Ordered double sum over interacting pairs, so each unordered pair counts twice.
inline double loss_ddi(const Vec& s, const DdiMatrix& ddi) {
  double l = 0;
  for (auto [a, b] : ddi.pairs()) l += 2.0 * s(a) * s(b);
  return l;
}

/// 1 when the DDI rate is within the acceptance rate, then decays linearly to 0
/// over a further kp.
inline double compute_alpha(double ddi_rate, double gamma, double kp) {
  if (ddi_rate <= gamma) return 1.0;
  return std::max(0.0, 1.0 - (ddi_rate - gamma) / kp);
}

inline double combine_loss(double bce, double multi, double ddi, double alpha, double beta) {
  return alpha * (beta * bce + (1.0 - beta) * multi) + (1.0 - alpha) * ddi;
}

/// DDI rate of a single predicted set: interacting unordered pairs over all pairs.
inline double set_ddi_rate(const OrdinalSet& set, const DdiMatrix& ddi) {
  std::size_t pairs = 0, bad = 0;
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      ++pairs;
      if (ddi.interacts(set[i], set[j])) ++bad;
    }
  return pairs == 0 ? 0.0 : static_cast<double>(bad) / static_cast<double>(pairs);
}

// ---- tape versions --------------------------------------------------------------

inline Var loss_bce(Tape& tape, Var scores, const Vec& m) {
  const Vec s = tape.value(scores);
  Vec v(1);
  v(0) = loss_bce(s, m);
  return tape.custom(std::move(v), [scores, m](Tape& t, const Vec& g) {
    const Vec& sv = t.value(scores);
    Vec& gs = t.grad(scores);
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) < kScoreClamp || sv(i) > 1.0 - kScoreClamp) continue;  // clamped: flat
      gs(i) += g(0) * (m(i) > 0.5 ? -1.0 / sv(i) : 1.0 / (1.0 - sv(i)));
    }
  });
}

inline Var loss_multi(Tape& tape, Var scores, const Vec& m) {
  Vec v(1);
  v(0) = loss_multi(tape.value(scores), m);
  return tape.custom(std::move(v), [scores, m](Tape& t, const Vec& g) {
    const Vec& s = t.value(scores);
    Vec& gs = t.grad(scores);
    const double w = g(0) / static_cast<double>(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (m(i) < 0.5) continue;
      for (Eigen::Index j = 0; j < s.size(); ++j) {
        if (m(j) > 0.5 || 1.0 - (s(i) - s(j)) <= 0.0) continue;
        gs(i) -= w;
        gs(j) += w;
      }
    }
  });
}

inline Var loss_ddi(Tape& tape, Var scores, const DdiMatrix& ddi) {
  Vec v(1);
  v(0) = loss_ddi(tape.value(scores), ddi);
  auto pairs = ddi.pairs();
  return tape.custom(std::move(v), [scores, pairs = std::move(pairs)](Tape& t, const Vec& g) {
    const Vec& s = t.value(scores);
    Vec& gs = t.grad(scores);
    for (auto [a, b] : pairs) {
      gs(a) += 2.0 * g(0) * s(b);
      gs(b) += 2.0 * g(0) * s(a);
    }
  });
}

struct LossTerms {
  Var total;
  double bce = 0, multi = 0, ddi = 0, alpha = 1;
};

/// Combined objective with alpha held fixed for this step.
inline LossTerms combine_loss(Tape& tape, Var scores, const Vec& truth, const DdiMatrix& ddi, double alpha,
                              double beta) {
  const Var bce = loss_bce(tape, scores, truth);
  const Var multi = loss_multi(tape, scores, truth);
  const Var l_ddi = loss_ddi(tape, scores, ddi);
  const Var fit = tape.linear_combination(bce, beta, multi, 1.0 - beta);
  const Var total = tape.linear_combination(fit, alpha, l_ddi, 1.0 - alpha);
  return {total, tape.scalar(bce), tape.scalar(multi), tape.scalar(l_ddi), alpha};
}

}  // namespace causalrx::train
