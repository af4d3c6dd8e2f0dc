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
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "causalrx/core/error.hpp"

namespace causalrx {

enum class EntityKind : std::uint8_t { disease = 0, procedure = 1, medication = 2 };

inline constexpr std::array<EntityKind, 3> kAllKinds = {EntityKind::disease, EntityKind::procedure,
                                                        EntityKind::medication};

inline std::string_view kind_name(EntityKind kind) {
  switch (kind) {
    case EntityKind::disease: return "disease";
    case EntityKind::procedure: return "procedure";
    case EntityKind::medication: return "medication";
  }
  return "?";
}

/// Ordered code list with a code -> ordinal index.
class EntityVocab {
 public:
  EntityVocab() = default;
  EntityVocab(EntityKind kind, std::vector<std::string> codes) : kind_(kind), codes_(std::move(codes)) {
    index_.reserve(codes_.size());
    for (std::size_t i = 0; i < codes_.size(); ++i) {
      if (!index_.emplace(codes_[i], static_cast<int>(i)).second)
        throw ValidationError("duplicate " + std::string(kind_name(kind_)) + " code '" + codes_[i] + "'");
    }
  }

  EntityKind kind() const { return kind_; }
  std::size_t size() const { return codes_.size(); }
  const std::vector<std::string>& codes() const { return codes_; }
  const std::string& code(int ordinal) const { return codes_.at(static_cast<std::size_t>(ordinal)); }

  /// Returns -1 when the code is not part of the vocabulary.
  int find(std::string_view code) const {
    auto it = index_.find(std::string(code));
    return it == index_.end() ? -1 : it->second;
  }

  int ordinal(std::string_view code) const {
    int idx = find(code);
    if (idx < 0)
      throw ValidationError("unknown " + std::string(kind_name(kind_)) + " code '" + std::string(code) + "'");
    return idx;
  }

  bool operator==(const EntityVocab& other) const { return kind_ == other.kind_ && codes_ == other.codes_; }

 private:
  EntityKind kind_ = EntityKind::disease;
  std::vector<std::string> codes_;
  std::unordered_map<std::string, int> index_;
};

using OrdinalSet = std::vector<int>;  // sorted, unique

inline OrdinalSet make_ordinal_set(std::vector<int> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

inline bool contains(const OrdinalSet& set, int value) { return std::binary_search(set.begin(), set.end(), value); }

struct Visit {
  OrdinalSet diseases;
  OrdinalSet procedures;
  OrdinalSet medications;

  const OrdinalSet& of(EntityKind kind) const {
    switch (kind) {
      case EntityKind::disease: return diseases;
      case EntityKind::procedure: return procedures;
      default: return medications;
    }
  }
  bool operator==(const Visit&) const = default;
};

struct PatientHistory {
  std::string id;
  std::vector<Visit> visits;  // chronological

  bool operator==(const PatientHistory&) const = default;
};

/// Symmetric binary drug-drug interaction matrix with zero diagonal.
class DdiMatrix {
 public:
  DdiMatrix() = default;
  explicit DdiMatrix(std::size_t n) : n_(n), entries_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool interacts(int a, int b) const { return entries_[index(a, b)] != 0; }
  int at(int a, int b) const { return entries_[index(a, b)]; }

  void add_pair(int a, int b) {
    if (a == b) throw ValidationError("DDI pair on the diagonal (medication " + std::to_string(a) + ")");
    entries_[index(a, b)] = 1;
    entries_[index(b, a)] = 1;
  }

  /// Unordered interacting pairs (i < j).
  std::vector<std::pair<int, int>> pairs() const {
    std::vector<std::pair<int, int>> out;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if (entries_[i * n_ + j]) out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return out;
  }

  bool operator==(const DdiMatrix&) const = default;

 private:
  std::size_t index(int a, int b) const {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n_ || static_cast<std::size_t>(b) >= n_)
      throw UsageError("DDI index out of range");
    return static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b);
  }

  std::size_t n_ = 0;
  std::vector<std::uint8_t> entries_;
};

/// Sizes of the three vocabularies and their placement in the unified entity index
/// (diseases first, then procedures, then medications).
struct EntityLayout {
  std::size_t n_diseases = 0;
  std::size_t n_procedures = 0;
  std::size_t n_medications = 0;

  std::size_t total() const { return n_diseases + n_procedures + n_medications; }
  std::size_t count(EntityKind kind) const {
    switch (kind) {
      case EntityKind::disease: return n_diseases;
      case EntityKind::procedure: return n_procedures;
      default: return n_medications;
    }
  }
  int offset(EntityKind kind) const {
    switch (kind) {
      case EntityKind::disease: return 0;
      case EntityKind::procedure: return static_cast<int>(n_diseases);
      default: return static_cast<int>(n_diseases + n_procedures);
    }
  }
  int global(EntityKind kind, int ordinal) const { return offset(kind) + ordinal; }
  EntityKind kind_of(int global) const {
    if (global < static_cast<int>(n_diseases)) return EntityKind::disease;
    if (global < static_cast<int>(n_diseases + n_procedures)) return EntityKind::procedure;
    return EntityKind::medication;
  }
  int local(int global) const { return global - offset(kind_of(global)); }
  bool operator==(const EntityLayout&) const = default;
};

struct PatientCohort {
  EntityVocab diseases{EntityKind::disease, {}};
  EntityVocab procedures{EntityKind::procedure, {}};
  EntityVocab medications{EntityKind::medication, {}};
  std::vector<PatientHistory> patients;
  DdiMatrix ddi;

  const EntityVocab& vocab(EntityKind kind) const {
    switch (kind) {
      case EntityKind::disease: return diseases;
      case EntityKind::procedure: return procedures;
      default: return medications;
    }
  }

  EntityLayout layout() const { return {diseases.size(), procedures.size(), medications.size()}; }

  std::size_t visit_count() const {
    std::size_t n = 0;
    for (const auto& p : patients) n += p.visits.size();
    return n;
  }

  /// Same vocabularies and DDI matrix, different patient subset.
  PatientCohort with_patients(std::vector<PatientHistory> subset) const {
    PatientCohort out{diseases, procedures, medications, std::move(subset), ddi};
    return out;
  }

  bool operator==(const PatientCohort& other) const {
    return diseases == other.diseases && procedures == other.procedures && medications == other.medications &&
           patients == other.patients && ddi == other.ddi;
  }
};

/// Checks every cohort invariant: ordinals in range, sorted unique sets, non-empty
/// histories, no visit lacking both diseases and procedures, DDI shape.
inline void validate(const PatientCohort& cohort) {
  const EntityLayout layout = cohort.layout();
  for (const auto& patient : cohort.patients) {
    if (patient.visits.empty()) throw ValidationError("patient '" + patient.id + "' has no visits");
    for (std::size_t t = 0; t < patient.visits.size(); ++t) {
      const Visit& v = patient.visits[t];
      if (v.diseases.empty() && v.procedures.empty())
        throw ValidationError("patient '" + patient.id + "' visit " + std::to_string(t) +
                              " has neither diseases nor procedures");
      for (EntityKind kind : kAllKinds) {
        const OrdinalSet& set = v.of(kind);
        for (std::size_t i = 0; i < set.size(); ++i) {
          if (set[i] < 0 || static_cast<std::size_t>(set[i]) >= layout.count(kind))
            throw ValidationError("patient '" + patient.id + "' has out-of-range " + std::string(kind_name(kind)) +
                                  " ordinal " + std::to_string(set[i]));
          if (i > 0 && set[i - 1] >= set[i])
            throw ValidationError("patient '" + patient.id + "' has an unsorted or duplicated " +
                                  std::string(kind_name(kind)) + " set");
        }
      }
    }
  }
  if (cohort.ddi.size() != layout.n_medications) throw ValidationError("DDI matrix size differs from medication count");
}

struct MultiHot {
  std::vector<double> diseases;
  std::vector<double> procedures;
  std::vector<double> medications;
};

inline std::vector<double> multi_hot(const OrdinalSet& set, std::size_t size) {
  std::vector<double> out(size, 0.0);
  for (int i : set) out[static_cast<std::size_t>(i)] = 1.0;
  return out;
}

inline OrdinalSet decode_multi_hot(const std::vector<double>& vec) {
  OrdinalSet out;
  for (std::size_t i = 0; i < vec.size(); ++i)
    if (vec[i] != 0.0) out.push_back(static_cast<int>(i));
  return out;
}

inline MultiHot encode_visit(const Visit& visit, const EntityLayout& layout) {
  return {multi_hot(visit.diseases, layout.n_diseases), multi_hot(visit.procedures, layout.n_procedures),
          multi_hot(visit.medications, layout.n_medications)};
}

}  // namespace causalrx
