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

// Run configuration: a flat JSON object. Every key can be overridden from the
// environment as CAUSALRX_<KEY in upper case>, e.g. CAUSALRX_LEARNING_RATE=0.001.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "causalrx/core/error.hpp"
#include "causalrx/core/io_util.hpp"
#include "causalrx/discovery/search.hpp"
#include "causalrx/model/params.hpp"
#include "causalrx/model/recommender.hpp"
#include "causalrx/train/trainer.hpp"

namespace causalrx::pipeline {

struct RunConfig {
  // Inputs and outputs. Either `cohort` or `synth_spec` must be set; with only a
  // spec, the cohort is generated into the artifact directory.
  std::string cohort;
  std::string ddi;
  std::string synth_spec;
  std::string artifacts = "artifacts";

  std::string mode = "full";
  std::uint64_t seed = 1;

  // Discovery.
  std::size_t max_parents = 3;
  std::size_t prescreen_k = 10;  // 0 disables prescreening
  bool tier_constraint = true;
  bool rediscover_per_visit = false;

  // Encoder and recommender.
  std::size_t dim = 64;
  std::size_t hidden = 64;
  std::size_t mlp_hidden = 64;
  std::size_t layers = 2;
  std::size_t relations = 5;

  // Training.
  double beta = 0.95;
  double gamma = 0.06;
  double kp = 0.05;
  double delta = 0.5;
  double learning_rate = 5e-4;
  double weight_decay = 0.005;
  double dropout = 0.5;
  std::size_t epochs = 30;

  // Evaluation.
  std::size_t bootstrap_rounds = 10;
  double bootstrap_fraction = 0.8;
};

namespace detail {

/// Visits every key with a reference to its field.
template <typename Config, typename F>
void for_each_field(Config& c, F&& f) {
  f("cohort", c.cohort);
  f("ddi", c.ddi);
  f("synth_spec", c.synth_spec);
  f("artifacts", c.artifacts);
  f("mode", c.mode);
  f("seed", c.seed);
  f("max_parents", c.max_parents);
  f("prescreen_k", c.prescreen_k);
  f("tier_constraint", c.tier_constraint);
  f("rediscover_per_visit", c.rediscover_per_visit);
  f("dim", c.dim);
  f("hidden", c.hidden);
  f("mlp_hidden", c.mlp_hidden);
  f("layers", c.layers);
  f("relations", c.relations);
  f("beta", c.beta);
  f("gamma", c.gamma);
  f("kp", c.kp);
  f("delta", c.delta);
  f("learning_rate", c.learning_rate);
  f("weight_decay", c.weight_decay);
  f("dropout", c.dropout);
  f("epochs", c.epochs);
  f("bootstrap_rounds", c.bootstrap_rounds);
  f("bootstrap_fraction", c.bootstrap_fraction);
}

template <typename T>
T parse_scalar(const std::string& key, const std::string& text) {
  if constexpr (std::is_same_v<T, std::string>) {
    return text;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (text == "1" || text == "true") return true;
    if (text == "0" || text == "false") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + text + "'");
  } else {
    T v{};
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
      throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
    return v;
  }
}

inline std::string env_name(const std::string& key) {
  std::string out = "CAUSALRX_";
  for (char ch : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  detail::for_each_field(cfg, [&](const char* key, const auto& value) { j[key] = value; });
  return j;
}

/// Unknown keys are rejected so typos do not silently fall back to defaults.
inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  std::size_t known = 0;
  detail::for_each_field(cfg, [&](const char* key, auto& value) {
    if (!j.contains(key)) return;
    ++known;
    try {
      j.at(key).get_to(value);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
  });
  if (known != j.size()) {
    RunConfig probe;
    for (const auto& [key, _] : j.items()) {
      bool found = false;
      detail::for_each_field(probe, [&](const char* k, auto&) { found = found || key == k; });
      if (!found) throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v) return std::nullopt;
  return std::string(v);
}

inline void apply_env(RunConfig& cfg, const EnvLookup& env = process_env) {
  detail::for_each_field(cfg, [&](const char* key, auto& value) {
    if (auto v = env(detail::env_name(key))) value = detail::parse_scalar<std::decay_t<decltype(value)>>(key, *v);
  });
}

/// Paths in a config file are relative to the file's directory.
inline void resolve_paths(RunConfig& cfg, const std::filesystem::path& base) {
  for (std::string* p : {&cfg.cohort, &cfg.ddi, &cfg.synth_spec, &cfg.artifacts})
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
}

/// Reads a config file, then applies environment overrides.
inline RunConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("invalid config JSON in " + path.string() + ": " + e.what());
  }
  RunConfig cfg = config_from_json(j);
  apply_env(cfg, env);
  resolve_paths(cfg, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
  return cfg;
}

/// FNV-1a of the canonical JSON form without file locations, so moving inputs or
/// outputs does not change it. Input contents are hashed separately per stage.
inline std::string config_hash(const RunConfig& cfg) {
  auto j = to_json(cfg);
  for (const char* k : {"cohort", "ddi", "synth_spec", "artifacts"}) j.erase(k);
  return hex64(fnv1a(j.dump()));
}

inline train::LossConfig loss_config(const RunConfig& cfg) {
  train::LossConfig lc;
  lc.beta = cfg.beta;
  lc.gamma = cfg.gamma;
  lc.kp = cfg.kp;
  lc.delta = cfg.delta;
  lc.learning_rate = cfg.learning_rate;
  lc.weight_decay = cfg.weight_decay;
  lc.dropout = cfg.dropout;
  lc.epochs = cfg.epochs;
  lc.seed = cfg.seed;
  return lc;
}

inline model::ModelConfig model_config(const RunConfig& cfg) {
  return {cfg.dim, cfg.hidden, cfg.mlp_hidden, cfg.layers, cfg.relations};
}

inline discovery::SearchConfig search_config(const RunConfig& cfg, const EntityLayout& layout) {
  discovery::SearchConfig sc;
  sc.score.max_parents = cfg.max_parents;
  sc.prescreen_k = cfg.prescreen_k == 0 ? discovery::kNoPrescreen : cfg.prescreen_k;
  if (cfg.tier_constraint) sc.forbidden = discovery::treatment_tier_constraint(layout);
  return sc;
}

inline void validate(const RunConfig& cfg) {
  model::parse_mode(cfg.mode);
  if (cfg.cohort.empty() && cfg.synth_spec.empty()) throw ConfigError("config needs 'cohort' or 'synth_spec'");
  for (const std::string* p : {&cfg.cohort, &cfg.ddi, &cfg.synth_spec})
    if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("input path does not exist: " + *p);
  if (cfg.artifacts.empty()) throw ConfigError("'artifacts' must name a directory");
  if (cfg.relations < 2) throw ConfigError("relations must be >= 2");
  if (cfg.layers < 1) throw ConfigError("layers must be >= 1");
  if (cfg.dim == 0 || cfg.hidden == 0 || cfg.mlp_hidden == 0) throw ConfigError("model widths must be positive");
  if (cfg.max_parents < 1) throw ConfigError("max_parents must be >= 1");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.bootstrap_rounds < 1) throw ConfigError("bootstrap_rounds must be >= 1");
  if (!(cfg.bootstrap_fraction > 0.0 && cfg.bootstrap_fraction <= 1.0))
    throw ConfigError("bootstrap_fraction must lie in (0, 1]");
  loss_config(cfg).validate();
}

}  // namespace causalrx::pipeline
