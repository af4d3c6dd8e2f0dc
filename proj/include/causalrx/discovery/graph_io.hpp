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

// Graph exchange formats.
//   text: one edge per line, "<kind>:<code> -> <kind>:<code>", '#' starts a comment
//   json: {"version":1, "edges":[{"parent":{"kind":..,"code":..},"child":{..}}, ...]}

#include <filesystem>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "causalrx/core/cohort.hpp"
#include "causalrx/core/io_util.hpp"
#include "causalrx/discovery/graph.hpp"

namespace causalrx::discovery {

namespace detail {

inline std::string qualified(const PatientCohort& vocab, int global) {
  const EntityLayout layout = vocab.layout();
  const EntityKind kind = layout.kind_of(global);
  return std::string(kind_name(kind)) + ":" + vocab.vocab(kind).code(layout.local(global));
}

inline EntityKind parse_kind(const std::string& s) {
  if (s == "disease") return EntityKind::disease;
  if (s == "procedure") return EntityKind::procedure;
  if (s == "medication") return EntityKind::medication;
  throw ParseError("unknown entity kind '" + s + "'");
}

inline int resolve(const PatientCohort& vocab, const std::string& kind, const std::string& code) {
  const EntityKind k = parse_kind(kind);
  return vocab.layout().global(k, vocab.vocab(k).ordinal(code));
}

}  // namespace detail

inline std::string format_graph_text(const CausalGraph& g, const PatientCohort& vocab) {
  std::string out;
  for (auto [p, c] : g.edges()) out += detail::qualified(vocab, p) + " -> " + detail::qualified(vocab, c) + "\n";
  return out;
}

inline nlohmann::json graph_to_json(const CausalGraph& g, const PatientCohort& vocab) {
  const EntityLayout layout = vocab.layout();
  nlohmann::json edges = nlohmann::json::array();
  auto node = [&](int v) {
    const EntityKind k = layout.kind_of(v);
    return nlohmann::json{{"kind", kind_name(k)}, {"code", vocab.vocab(k).code(layout.local(v))}};
  };
  for (auto [p, c] : g.edges()) edges.push_back({{"parent", node(p)}, {"child", node(c)}});
  return {{"version", 1}, {"edges", std::move(edges)}};
}

inline CausalGraph parse_graph_text(const std::string& text, const PatientCohort& vocab) {
  CausalGraph g(vocab.layout().total());
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto split_node = [&](const std::string& s) {
    auto colon = s.find(':');
    if (colon == std::string::npos) throw ParseError("expected <kind>:<code>", line_no);
    return detail::resolve(vocab, s.substr(0, colon), s.substr(colon + 1));
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string row = trim(line.substr(0, line.find('#')));
    if (row.empty()) continue;
    auto arrow = row.find("->");
    if (arrow == std::string::npos) throw ParseError("expected 'parent -> child'", line_no);
    const int p = split_node(trim(row.substr(0, arrow)));
    const int c = split_node(trim(row.substr(arrow + 2)));
    try {
      g.add_edge(p, c);
    } catch (const UsageError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return g;
}

inline CausalGraph graph_from_json(const nlohmann::json& j, const PatientCohort& vocab) {
  CausalGraph g(vocab.layout().total());
  try {
    for (const auto& e : j.at("edges")) {
      const int p = detail::resolve(vocab, e.at("parent").at("kind"), e.at("parent").at("code"));
      const int c = detail::resolve(vocab, e.at("child").at("kind"), e.at("child").at("code"));
      g.add_edge(p, c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid graph JSON: ") + e.what());
  } catch (const UsageError& e) {
    throw ParseError(std::string("invalid graph: ") + e.what());
  }
  return g;
}

/// Accepts either format, chosen by file extension (.json vs anything else).
inline CausalGraph load_graph(const std::filesystem::path& path, const PatientCohort& vocab) {
  const std::string text = read_file(path);
  if (path.extension() == ".json") {
    try {
      return graph_from_json(nlohmann::json::parse(text), vocab);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid graph JSON: ") + e.what());
    }
  }
  return parse_graph_text(text, vocab);
}

}  // namespace causalrx::discovery
