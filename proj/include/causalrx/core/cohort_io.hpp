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

// Cohort exchange format (JSON-Lines):
//   line 1:  {"diseases":[...], "procedures":[...], "medications":[...]}
//   line k:  {"patient_id": "...", "visits":[{"d":[...], "p":[...], "m":[...]}, ...]}
// Visits are listed chronologically. Blank lines are ignored.
//
// DDI file: CSV with header "med_a,med_b", one undirected pair per row.

#include <filesystem>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causalrx/core/cohort.hpp"
#include "causalrx/core/io_util.hpp"

namespace causalrx {

namespace detail {

inline std::vector<std::string> string_array(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j[key].is_array()) throw ParseError(std::string("missing array '") + key + "'", line);
  std::vector<std::string> out;
  for (const auto& v : j[key]) {
    if (!v.is_string()) throw ParseError(std::string("non-string entry in '") + key + "'", line);
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline OrdinalSet resolve_codes(const nlohmann::json& visit, const char* key, const EntityVocab& vocab,
                                std::size_t line) {
  if (!visit.contains(key)) return {};
  std::vector<int> ords;
  for (const auto& code : string_array(visit, key, line)) {
    int idx = vocab.find(code);
    if (idx < 0)
      throw ValidationError("line " + std::to_string(line) + ": unknown " + std::string(kind_name(vocab.kind())) +
                            " code '" + code + "'");
    ords.push_back(idx);
  }
  return make_ordinal_set(std::move(ords));
}

}  // namespace detail

/// Parses a cohort from a JSON-Lines stream. The DDI matrix is all-zero;
/// attach one with load_ddi().
inline PatientCohort parse_cohort(std::istream& in) {
  PatientCohort cohort;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line_no;
    if (trim(text).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!j.is_object()) throw ParseError("record is not a JSON object", line_no);
    if (!have_header) {
      cohort.diseases = EntityVocab(EntityKind::disease, detail::string_array(j, "diseases", line_no));
      cohort.procedures = EntityVocab(EntityKind::procedure, detail::string_array(j, "procedures", line_no));
      cohort.medications = EntityVocab(EntityKind::medication, detail::string_array(j, "medications", line_no));
      have_header = true;
      continue;
    }
    PatientHistory patient;
    if (!j.contains("patient_id") || !j["patient_id"].is_string()) throw ParseError("missing 'patient_id'", line_no);
    patient.id = j["patient_id"].get<std::string>();
    if (!j.contains("visits") || !j["visits"].is_array()) throw ParseError("missing array 'visits'", line_no);
    for (const auto& v : j["visits"]) {
      if (!v.is_object()) throw ParseError("visit is not an object", line_no);
      Visit visit;
      visit.diseases = detail::resolve_codes(v, "d", cohort.diseases, line_no);
      visit.procedures = detail::resolve_codes(v, "p", cohort.procedures, line_no);
      visit.medications = detail::resolve_codes(v, "m", cohort.medications, line_no);
      patient.visits.push_back(std::move(visit));
    }
    cohort.patients.push_back(std::move(patient));
  }
  if (!have_header) throw ParseError("missing header record");
  cohort.ddi = DdiMatrix(cohort.medications.size());
  validate(cohort);
  return cohort;
}

inline void load_ddi(PatientCohort& cohort, std::istream& in) {
  DdiMatrix ddi(cohort.medications.size());
  std::string text;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, text)) {
    ++line_no;
    std::string row = trim(text);
    if (row.empty()) continue;
    if (!header) {
      if (row != "med_a,med_b") throw ParseError("expected header 'med_a,med_b'", line_no);
      header = true;
      continue;
    }
    auto comma = row.find(',');
    if (comma == std::string::npos || row.find(',', comma + 1) != std::string::npos)
      throw ParseError("expected two columns", line_no);
    std::string a = trim(std::string_view(row).substr(0, comma));
    std::string b = trim(std::string_view(row).substr(comma + 1));
    int ia = cohort.medications.find(a), ib = cohort.medications.find(b);
    if (ia < 0) throw ValidationError("line " + std::to_string(line_no) + ": unknown medication code '" + a + "'");
    if (ib < 0) throw ValidationError("line " + std::to_string(line_no) + ": unknown medication code '" + b + "'");
    ddi.add_pair(ia, ib);
  }
  if (!header) throw ParseError("missing DDI header");
  cohort.ddi = std::move(ddi);
}

inline PatientCohort load_cohort(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return parse_cohort(in);
}

inline PatientCohort load_cohort(const std::filesystem::path& cohort_path, const std::filesystem::path& ddi_path) {
  PatientCohort cohort = load_cohort(cohort_path);
  if (!ddi_path.empty()) {
    std::istringstream in(read_file(ddi_path));
    load_ddi(cohort, in);
  }
  return cohort;
}

inline std::string format_cohort(const PatientCohort& cohort) {
  std::ostringstream out;
  nlohmann::json header = {{"diseases", cohort.diseases.codes()},
                           {"procedures", cohort.procedures.codes()},
                           {"medications", cohort.medications.codes()}};
  out << header.dump() << '\n';
  for (const auto& patient : cohort.patients) {
    nlohmann::json visits = nlohmann::json::array();
    for (const auto& v : patient.visits) {
      nlohmann::json jv = nlohmann::json::object();
      const char* keys[] = {"d", "p", "m"};
      for (std::size_t k = 0; k < 3; ++k) {
        nlohmann::json codes = nlohmann::json::array();
        for (int o : v.of(kAllKinds[k])) codes.push_back(cohort.vocab(kAllKinds[k]).code(o));
        jv[keys[k]] = std::move(codes);
      }
      visits.push_back(std::move(jv));
    }
    nlohmann::json rec = {{"patient_id", patient.id}, {"visits", std::move(visits)}};
    out << rec.dump() << '\n';
  }
  return out.str();
}

inline std::string format_ddi(const PatientCohort& cohort) {
  std::string out = "med_a,med_b\n";
  for (auto [a, b] : cohort.ddi.pairs()) out += cohort.medications.code(a) + "," + cohort.medications.code(b) + "\n";
  return out;
}

inline void save_cohort(const PatientCohort& cohort, const std::filesystem::path& path) {
  write_file_atomic(path, format_cohort(cohort));
}

inline void save_ddi(const PatientCohort& cohort, const std::filesystem::path& path) {
  write_file_atomic(path, format_ddi(cohort));
}

}  // namespace causalrx
