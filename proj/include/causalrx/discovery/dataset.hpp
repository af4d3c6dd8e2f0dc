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

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "causalrx/core/cohort.hpp"

namespace causalrx::discovery {

/// Visit-by-entity binary matrix stored as packed columns, so contingency counts
/// reduce to AND + popcount over 64-row words.
class BinaryDataset {
 public:
  BinaryDataset() = default;
  BinaryDataset(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), words_((rows + 63) / 64), bits_(words_ * cols, 0), ones_(cols, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t words() const { return words_; }

  void set(std::size_t row, std::size_t col) {
    std::uint64_t& w = bits_[col * words_ + row / 64];
    const std::uint64_t bit = std::uint64_t{1} << (row % 64);
    if (!(w & bit)) {
      w |= bit;
      ++ones_[col];
    }
  }
  bool get(std::size_t row, std::size_t col) const {
    return (bits_[col * words_ + row / 64] >> (row % 64)) & 1U;
  }
  std::span<const std::uint64_t> column(std::size_t col) const {
    return {bits_.data() + col * words_, words_};
  }
  std::size_t ones(std::size_t col) const { return ones_[col]; }

  /// Mask of valid rows in word w.
  std::uint64_t row_mask(std::size_t w) const {
    if (w + 1 < words_ || rows_ % 64 == 0) return ~std::uint64_t{0};
    return (std::uint64_t{1} << (rows_ % 64)) - 1;
  }

  /// Number of rows where every column in `cols` equals the matching bit of `config`
  /// (bit k of config is the required value of cols[k]).
  std::size_t count_matching(std::span<const int> cols, std::uint32_t config) const {
    std::size_t total = 0;
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t m = row_mask(w);
      for (std::size_t k = 0; k < cols.size() && m; ++k) {
        const std::uint64_t c = bits_[static_cast<std::size_t>(cols[k]) * words_ + w];
        m &= ((config >> k) & 1U) ? c : ~c;
      }
      total += static_cast<std::size_t>(std::popcount(m));
    }
    return total;
  }

  /// Counts over all 2^|cols| configurations of `cols`, split by the value of `target`:
  /// result[2 * config + value].
  std::vector<std::uint32_t> contingency(int target, std::span<const int> cols) const {
    const std::uint32_t configs = 1U << cols.size();
    std::vector<std::uint32_t> out(2 * configs, 0);
    const std::uint64_t* t = bits_.data() + static_cast<std::size_t>(target) * words_;
    for (std::size_t w = 0; w < words_; ++w) {
      const std::uint64_t valid = row_mask(w);
      for (std::uint32_t cfg = 0; cfg < configs; ++cfg) {
        std::uint64_t m = valid;
        for (std::size_t k = 0; k < cols.size() && m; ++k) {
          const std::uint64_t c = bits_[static_cast<std::size_t>(cols[k]) * words_ + w];
          m &= ((cfg >> k) & 1U) ? c : ~c;
        }
        if (!m) continue;
        const auto on = static_cast<std::uint32_t>(std::popcount(m & t[w]));
        out[2 * cfg + 1] += on;
        out[2 * cfg] += static_cast<std::uint32_t>(std::popcount(m)) - on;
      }
    }
    return out;
  }

  /// Rows where both columns are 1.
  std::size_t co_count(std::size_t a, std::size_t b) const {
    std::size_t total = 0;
    for (std::size_t w = 0; w < words_; ++w)
      total += static_cast<std::size_t>(std::popcount(bits_[a * words_ + w] & bits_[b * words_ + w]));
    return total;
  }

  BinaryDataset select_columns(std::span<const int> cols) const {
    BinaryDataset out(rows_, cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) {
      for (std::size_t w = 0; w < words_; ++w)
        out.bits_[k * words_ + w] = bits_[static_cast<std::size_t>(cols[k]) * words_ + w];
      out.ones_[k] = ones_[static_cast<std::size_t>(cols[k])];
    }
    return out;
  }

  BinaryDataset permute_rows(std::span<const std::size_t> perm) const {
    BinaryDataset out(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c)
        if (get(perm[r], c)) out.set(r, c);
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
  std::vector<std::size_t> ones_;
};

/// One row per visit over the unified entity index; medications are the visit's own.
inline BinaryDataset build_dataset(const PatientCohort& cohort) {
  const EntityLayout layout = cohort.layout();
  BinaryDataset data(cohort.visit_count(), layout.total());
  std::size_t row = 0;
  for (const auto& patient : cohort.patients) {
    for (const auto& visit : patient.visits) {
      for (EntityKind kind : kAllKinds)
        for (int o : visit.of(kind)) data.set(row, static_cast<std::size_t>(layout.global(kind, o)));
      ++row;
    }
  }
  return data;
}

}  // namespace causalrx::discovery
