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

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causalrx/core/cohort.hpp"
#include "causalrx/core/io_util.hpp"
#include "causalrx/model/tape.hpp"

namespace causalrx::model {

struct ModelConfig {
  std::size_t dim = 64;         // entity embedding width
  std::size_t hidden = 64;      // GRU state width
  std::size_t mlp_hidden = 64;  // scoring head hidden layer
  std::size_t layers = 2;       // RGCN layers
  std::size_t relations = 5;    // RGCN edge types
  bool operator==(const ModelConfig&) const = default;
};

struct RgcnParameters {
  std::vector<Param> self;                // W_0^l
  std::vector<std::vector<Param>> theta;  // Theta_r^l, W_r^l = I + Theta_r^l
};

struct GruParameters {
  Param w_ir, w_iz, w_in;  // hidden x input
  Param w_hr, w_hz, w_hn;  // hidden x hidden
  Param b_ir, b_iz, b_in, b_hr, b_hz, b_hn;
};

struct HeadParameters {
  Param w1, b1;  // mlp_hidden x hidden
  Param w2, b2;  // medications x mlp_hidden
};

/// Every trainable tensor of the recommender. Non-copyable by intent of use: tapes
/// hold references into these Params, so instances must stay put while a tape lives.
struct ModelParameters {
  ModelConfig config;
  std::size_t n_diseases = 0, n_procedures = 0, n_medications = 0;

  Param emb_d, emb_p, emb_m;
  Param dsa_w_d, dsa_b_d, dsa_w_p, dsa_b_p, dsa_w_m, dsa_b_m;
  RgcnParameters rgcn_dm, rgcn_pm;
  GruParameters gru;
  HeadParameters head;

  Param& embedding(EntityKind kind) {
    return kind == EntityKind::disease ? emb_d : kind == EntityKind::procedure ? emb_p : emb_m;
  }
  Param& dsa_w(EntityKind kind) {
    return kind == EntityKind::disease ? dsa_w_d : kind == EntityKind::procedure ? dsa_w_p : dsa_w_m;
  }
  Param& dsa_b(EntityKind kind) {
    return kind == EntityKind::disease ? dsa_b_d : kind == EntityKind::procedure ? dsa_b_p : dsa_b_m;
  }

  std::vector<Param*> all() {
    std::vector<Param*> out{&emb_d, &emb_p, &emb_m, &dsa_w_d, &dsa_b_d, &dsa_w_p, &dsa_b_p, &dsa_w_m, &dsa_b_m};
    for (RgcnParameters* r : {&rgcn_dm, &rgcn_pm}) {
      for (auto& p : r->self) out.push_back(&p);
      for (auto& layer : r->theta)
        for (auto& p : layer) out.push_back(&p);
    }
    for (Param* p : {&gru.w_ir, &gru.w_iz, &gru.w_in, &gru.w_hr, &gru.w_hz, &gru.w_hn, &gru.b_ir, &gru.b_iz, &gru.b_in,
                     &gru.b_hr, &gru.b_hz, &gru.b_hn, &head.w1, &head.b1, &head.w2, &head.b2})
      out.push_back(p);
    return out;
  }

  std::size_t count() {
    std::size_t n = 0;
    for (Param* p : all()) n += static_cast<std::size_t>(p->size());
    return n;
  }

  void zero_grad() {
    for (Param* p : all()) p->zero_grad();
  }
};

namespace detail {

inline Mat uniform(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

}  // namespace detail

/// Allocates and initializes all parameters. Embeddings ~ U(-0.1, 0.1); dense
/// weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); RGCN relation updates
/// start small so W_r begins near the identity.
inline void init_parameters(ModelParameters& p, const ModelConfig& cfg, const EntityLayout& layout, std::uint64_t seed) {
  if (cfg.dim == 0 || cfg.hidden == 0 || cfg.mlp_hidden == 0) throw ConfigError("model widths must be positive");
  if (cfg.layers < 1) throw ConfigError("RGCN needs at least one layer");
  if (cfg.relations < 2) throw ConfigError("number of edge types must be >= 2");
  std::mt19937_64 rng(seed);
  p.config = cfg;
  p.n_diseases = layout.n_diseases;
  p.n_procedures = layout.n_procedures;
  p.n_medications = layout.n_medications;
  const auto d = static_cast<Eigen::Index>(cfg.dim), h = static_cast<Eigen::Index>(cfg.hidden),
             k = static_cast<Eigen::Index>(cfg.mlp_hidden), m = static_cast<Eigen::Index>(layout.n_medications);
  auto u = [&](const std::string& name, Eigen::Index r, Eigen::Index c, double bound) {
    return Param(name, detail::uniform(r, c, bound, rng));
  };
  p.emb_d = u("emb_d", static_cast<Eigen::Index>(layout.n_diseases), d, 0.1);
  p.emb_p = u("emb_p", static_cast<Eigen::Index>(layout.n_procedures), d, 0.1);
  p.emb_m = u("emb_m", m, d, 0.1);
  const double bd = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  p.dsa_w_d = u("dsa_w_d", d, 1, bd);
  p.dsa_b_d = Param("dsa_b_d", Mat::Zero(1, 1));
  p.dsa_w_p = u("dsa_w_p", d, 1, bd);
  p.dsa_b_p = Param("dsa_b_p", Mat::Zero(1, 1));
  p.dsa_w_m = u("dsa_w_m", d, 1, bd);
  p.dsa_b_m = Param("dsa_b_m", Mat::Zero(1, 1));
  for (auto [r, tag] : {std::pair{&p.rgcn_dm, "dm"}, std::pair{&p.rgcn_pm, "pm"}}) {
    r->self.clear();
    r->theta.clear();
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      r->self.push_back(u(std::string("rgcn_") + tag + "_w0_" + std::to_string(l), d, d, bd));
      std::vector<Param> layer;
      for (std::size_t rel = 0; rel < cfg.relations; ++rel)
        layer.push_back(u(std::string("rgcn_") + tag + "_theta_" + std::to_string(l) + "_" + std::to_string(rel), d, d,
                          0.1 * bd));
      r->theta.push_back(std::move(layer));
    }
  }
  const double bg = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
  const Eigen::Index in = 3 * d;
  p.gru.w_ir = u("gru_w_ir", h, in, bg);
  p.gru.w_iz = u("gru_w_iz", h, in, bg);
  p.gru.w_in = u("gru_w_in", h, in, bg);
  p.gru.w_hr = u("gru_w_hr", h, h, bg);
  p.gru.w_hz = u("gru_w_hz", h, h, bg);
  p.gru.w_hn = u("gru_w_hn", h, h, bg);
  p.gru.b_ir = u("gru_b_ir", h, 1, bg);
  p.gru.b_iz = u("gru_b_iz", h, 1, bg);
  p.gru.b_in = u("gru_b_in", h, 1, bg);
  p.gru.b_hr = u("gru_b_hr", h, 1, bg);
  p.gru.b_hz = u("gru_b_hz", h, 1, bg);
  p.gru.b_hn = u("gru_b_hn", h, 1, bg);
  p.head.w1 = u("head_w1", k, h, bg);
  p.head.b1 = u("head_b1", k, 1, bg);
  const double bk = 1.0 / std::sqrt(static_cast<double>(cfg.mlp_hidden));
  p.head.w2 = u("head_w2", m, k, bk);
  p.head.b2 = u("head_b2", m, 1, bk);
}

// ---- checkpoint ------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_to_json(ModelParameters& p, const std::string& config_hash = {}) {
  nlohmann::json tensors = nlohmann::json::array();
  for (Param* t : p.all()) {
    std::vector<double> data(t->value.data(), t->value.data() + t->value.size());  // column-major
    tensors.push_back({{"name", t->name}, {"rows", t->value.rows()}, {"cols", t->value.cols()}, {"data", data}});
  }
  return {{"format", "causalrx-checkpoint"},
          {"version", kCheckpointVersion},
          {"config_hash", config_hash},
          {"model",
           {{"dim", p.config.dim},
            {"hidden", p.config.hidden},
            {"mlp_hidden", p.config.mlp_hidden},
            {"layers", p.config.layers},
            {"relations", p.config.relations}}},
          {"vocab", {{"diseases", p.n_diseases}, {"procedures", p.n_procedures}, {"medications", p.n_medications}}},
          {"tensors", tensors}};
}

inline void checkpoint_from_json(ModelParameters& p, const nlohmann::json& j) {
  try {
    if (j.at("format") != "causalrx-checkpoint") throw ParseError("not a checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ParseError("unsupported checkpoint version " + j.at("version").dump());
    ModelConfig cfg;
    const auto& m = j.at("model");
    cfg.dim = m.at("dim");
    cfg.hidden = m.at("hidden");
    cfg.mlp_hidden = m.at("mlp_hidden");
    cfg.layers = m.at("layers");
    cfg.relations = m.at("relations");
    const auto& v = j.at("vocab");
    init_parameters(p, cfg, {v.at("diseases"), v.at("procedures"), v.at("medications")}, 0);
    auto params = p.all();
    const auto& tensors = j.at("tensors");
    if (tensors.size() != params.size()) throw ParseError("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& t = tensors[i];
      if (t.at("name") != params[i]->name) throw ParseError("checkpoint tensor order mismatch at " + params[i]->name);
      const auto rows = t.at("rows").get<Eigen::Index>(), cols = t.at("cols").get<Eigen::Index>();
      if (rows != params[i]->value.rows() || cols != params[i]->value.cols())
        throw ParseError("checkpoint tensor shape mismatch for " + params[i]->name);
      const auto data = t.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ParseError("bad tensor size " + params[i]->name);
      params[i]->value = Eigen::Map<const Mat>(data.data(), rows, cols);
      params[i]->zero_grad();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(ModelParameters& p, const std::filesystem::path& path, const std::string& config_hash = {}) {
  write_file_atomic(path, checkpoint_to_json(p, config_hash).dump());
}

inline void load_checkpoint(ModelParameters& p, const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid checkpoint JSON: ") + e.what());
  }
  checkpoint_from_json(p, j);
}

}  // namespace causalrx::model
