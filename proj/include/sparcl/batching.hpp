// Copyright 2026 The sparcl-kit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Batch layout for n sample groups. Images and captions each occupy 3n rows
// in three role blocks: [0,n) real, [n,2n) synthetic negative, [2n,3n)
// synthetic positive. Row (role*n + g) belongs to group g.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sparcl/error.hpp"
#include "sparcl/numkit.hpp"
#include "sparcl/toyworld.hpp"

namespace sparcl {

enum class Role { kReal = 0, kNegative = 1, kPositive = 2 };

struct RowRef {
  Role role;
  std::size_t group;

  bool operator==(const RowRef&) const = default;
};

inline std::size_t row_index(Role role, std::size_t group, std::size_t n) {
  return static_cast<std::size_t>(role) * n + group;
}

inline RowRef locate_row(std::size_t row, std::size_t n) {
  if (n == 0 || row >= 3 * n) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "row " + std::to_string(row) + " outside batch of " + std::to_string(3 * n));
  }
  return {static_cast<Role>(row / n), row % n};
}

struct Batch {
  std::size_t n = 0;
  Matrix images;    // 3n × D_I
  Matrix captions;  // 3n × D_T
};

inline Batch build_batch(std::span<const SampleGroup> groups) {
  if (groups.empty()) throw Error(ErrorCode::kDimMismatch, "batch needs at least one group");
  const std::size_t n = groups.size();
  const std::size_t di = groups.front().img_r.size();
  const std::size_t dt = groups.front().cap_r.size();
  Batch b{n, Matrix(3 * n, di), Matrix(3 * n, dt)};

  auto put = [](Matrix& m, std::size_t row, const std::vector<double>& v) {
    if (v.size() != m.cols()) {
      throw Error(ErrorCode::kDimMismatch, "vector of dim " + std::to_string(v.size()) +
                                               " in batch of dim " + std::to_string(m.cols()));
    }
    std::copy(v.begin(), v.end(), m.row(row).begin());
  };
  for (std::size_t g = 0; g < n; ++g) {
    const SampleGroup& sg = groups[g];
    put(b.images, row_index(Role::kReal, g, n), sg.img_r);
    put(b.images, row_index(Role::kNegative, g, n), sg.img_sn);
    put(b.images, row_index(Role::kPositive, g, n), sg.img_sp);
    put(b.captions, row_index(Role::kReal, g, n), sg.cap_r);
    put(b.captions, row_index(Role::kNegative, g, n), sg.cap_sn);
    put(b.captions, row_index(Role::kPositive, g, n), sg.cap_sp);
  }
  return b;
}

// Ground-truth match labels in {-1,+1}. Rows index images, columns captions.
class AlignmentMatrix {
 public:
  AlignmentMatrix() = default;
  AlignmentMatrix(std::size_t size, std::int8_t fill) : size_(size), labels_(size * size, fill) {}

  std::size_t size() const noexcept { return size_; }
  int operator()(std::size_t i, std::size_t j) const { return labels_[i * size_ + j]; }
  void set(std::size_t i, std::size_t j, int label) {
    labels_[i * size_ + j] = static_cast<std::int8_t>(label);
  }

  std::size_t count_positive() const {
    std::size_t c = 0;
    for (auto v : labels_) c += v > 0 ? 1 : 0;
    return c;
  }

  // Plain paired batch: only the diagonal matches.
  static AlignmentMatrix paired(std::size_t n) {
    AlignmentMatrix m(n, -1);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, +1);
    return m;
  }

 private:
  std::size_t size_ = 0;
  std::vector<std::int8_t> labels_;
};

// Within a group, (I_r,T_r), (I_sn,T_sn), (I_sp,T_sp), (I_r,T_sp), (I_sp,T_r)
// match; everything else is a negative.
inline AlignmentMatrix alignment_matrix(std::size_t n) {
  AlignmentMatrix m(3 * n, -1);
  for (std::size_t g = 0; g < n; ++g) {
    for (Role ri : {Role::kReal, Role::kNegative, Role::kPositive}) {
      for (Role rc : {Role::kReal, Role::kNegative, Role::kPositive}) {
        const bool ri_neg = ri == Role::kNegative;
        const bool rc_neg = rc == Role::kNegative;
        if (ri_neg == rc_neg) m.set(row_index(ri, g, n), row_index(rc, g, n), +1);
      }
    }
  }
  return m;
}

// Index sets for one anchor row, each ascending.
struct PairSets {
  std::vector<std::size_t> positive;
  std::vector<std::size_t> hard_negative;
  std::vector<std::size_t> easy_negative;
  std::vector<std::size_t> real_negative;
};

namespace detail {

// The image-side and text-side constructions are the same map with the
// roles of rows and columns exchanged.
inline PairSets anchor_sets(std::size_t row, std::size_t n) {
  const RowRef ref = locate_row(row, n);
  const std::size_t g = ref.group;
  PairSets sets;
  if (ref.role == Role::kNegative) {
    sets.positive = {row_index(Role::kNegative, g, n)};
    sets.hard_negative = {row_index(Role::kReal, g, n), row_index(Role::kPositive, g, n)};
  } else {
    sets.positive = {row_index(Role::kReal, g, n), row_index(Role::kPositive, g, n)};
    sets.hard_negative = {row_index(Role::kNegative, g, n)};
  }
  for (std::size_t j = 0; j < 3 * n; ++j) {
    if (j % n == g) continue;
    sets.easy_negative.push_back(j);
    if (j < n) sets.real_negative.push_back(j);
  }
  return sets;
}

}  // namespace detail

// Caption indices grouped relative to image `row`.
inline PairSets caption_sets_for_image(std::size_t row, std::size_t n) {
  return detail::anchor_sets(row, n);
}

// Image indices grouped relative to caption `row`.
inline PairSets image_sets_for_caption(std::size_t row, std::size_t n) {
  return detail::anchor_sets(row, n);
}

}  // namespace sparcl
