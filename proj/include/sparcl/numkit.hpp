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

// Dense row-major kernels shared by the rest of the library. Everything is
// 64-bit; the sizes involved are small enough that naive loops are fine.

#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "sparcl/error.hpp"

namespace sparcl {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) {
        throw Error(ErrorCode::kDimMismatch, "ragged matrix literal");
      }
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  }
  return out;
}

// a (m×k) · b (k×n)
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kDimMismatch,
                "matmul inner dims " + std::to_string(a.cols()) + " vs " +
                    std::to_string(b.rows()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

// a (m×k) · bᵀ where b is (n×k); row-by-row dot products.
inline Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimMismatch,
                "row dims " + std::to_string(a.cols()) + " vs " + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

// aᵀ (k×m) · b (m×n) without materializing the transpose.
inline Matrix transposed_matmul(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::kDimMismatch,
                "outer dims " + std::to_string(a.rows()) + " vs " + std::to_string(b.rows()));
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto b_row = b.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ari = a(r, i);
      if (ari == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += ari * b_row[j];
    }
  }
  return out;
}

inline constexpr double kMinRowNorm = 1e-12;

inline Matrix l2_normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = norm(m.row(r));
    if (!(n >= kMinRowNorm)) {
      throw Error(ErrorCode::kZeroRow, "row " + std::to_string(r) + " has norm " +
                                           std::to_string(n));
    }
    for (double& v : out.row(r)) v /= n;
  }
  return out;
}

// Entry (i,j) is cos(a_i, b_j).
inline Matrix cosine_similarity_matrix(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols() || a.cols() == 0) {
    throw Error(ErrorCode::kDimMismatch,
                "cosine similarity over dims " + std::to_string(a.cols()) + " and " +
                    std::to_string(b.cols()));
  }
  return matmul_transposed(l2_normalize_rows(a), l2_normalize_rows(b));
}

// log(1 + e^x) without overflow.
inline double log1p_exp(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// C×H×W activations, channel-major.
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  std::size_t plane() const noexcept { return height * width; }
  std::span<double> channel(std::size_t c) { return {data.data() + c * plane(), plane()}; }
  std::span<const double> channel(std::size_t c) const {
    return {data.data() + c * plane(), plane()};
  }
};

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Population statistics per channel; stddev = sqrt(var + eps).
inline ChannelStats channel_stats(const FeatureMap& f, double eps) {
  if (f.plane() == 0 || f.channels == 0) {
    throw Error(ErrorCode::kEmptyMap, "feature map has no spatial extent");
  }
  if (!(eps >= 0.0)) throw Error(ErrorCode::kInvalidParams, "eps must be >= 0");
  ChannelStats stats;
  stats.mean.resize(f.channels);
  stats.stddev.resize(f.channels);
  const double count = static_cast<double>(f.plane());
  for (std::size_t c = 0; c < f.channels; ++c) {
    const auto xs = f.channel(c);
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / count;
    double sq = 0.0;
    for (double x : xs) sq += (x - mean) * (x - mean);
    stats.mean[c] = mean;
    stats.stddev[c] = std::sqrt(sq / count + eps);
  }
  return stats;
}

}  // namespace sparcl
