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

// Losses over a 3n×3n image-caption similarity matrix S (rows = images,
// columns = captions), each returning its value and dL/dS.
//
//   contrastive: pairwise sigmoid log-loss against the alignment labels.
//   margin:      hinge ranking of positives over hard negatives, hard over
//                easy negatives, and positives over real negatives (weighted
//                by alpha), with a per-pair margin m(d), d = S_pos - S_neg.
//   total:       contrastive + lambda * (image-side + text-side margin).
//
// The margin m(d) is held constant in the backward pass. All reductions run
// in a fixed sequential order so results are bit-reproducible.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sparcl/batching.hpp"
#include "sparcl/error.hpp"
#include "sparcl/numkit.hpp"

namespace sparcl {

enum class MarginMode { kNone, kFixed, kAdaptive, kAdaptiveInverse };

constexpr std::string_view margin_mode_name(MarginMode mode) {
  switch (mode) {
    case MarginMode::kNone: return "none";
    case MarginMode::kFixed: return "fixed";
    case MarginMode::kAdaptive: return "adaptive";
    case MarginMode::kAdaptiveInverse: return "adaptive_inverse";
  }
  return "unknown";
}

inline std::optional<MarginMode> parse_margin_mode(std::string_view s) {
  for (MarginMode m : {MarginMode::kNone, MarginMode::kFixed, MarginMode::kAdaptive,
                       MarginMode::kAdaptiveInverse}) {
    if (s == margin_mode_name(m)) return m;
  }
  return std::nullopt;
}

struct LossConfig {
  double temperature = 0.01;           // tau
  double bias = -30.0;                 // b
  double margin_weight = 0.01;         // lambda
  double real_negative_weight = 10.0;  // alpha
  double base_margin = 0.005;          // m0
  double cutoff = -0.02;               // beta
  double margin_scale = 1.0;           // gamma
  MarginMode margin_mode = MarginMode::kAdaptive;

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
    if (!(temperature > 0.0)) fail("temperature must be > 0");
    if (!std::isfinite(bias)) fail("bias must be finite");
    if (!(margin_weight >= 0.0)) fail("margin_weight must be >= 0");
    if (!(real_negative_weight >= 1.0)) fail("real_negative_weight must be >= 1");
    if (!(base_margin > 0.0)) fail("base_margin must be > 0");
    if (!(cutoff < 0.0)) fail("cutoff must be < 0");
    if (!(margin_scale >= 0.0)) fail("margin_scale must be >= 0");
  }
};

struct LossWithGrad {
  double value = 0.0;
  Matrix grad;
};

inline LossWithGrad sigmoid_contrastive_loss(const Matrix& s, const AlignmentMatrix& labels,
                                             double temperature, double bias) {
  if (s.rows() != s.cols() || s.rows() != labels.size() || s.rows() == 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "similarity " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                    " vs labels " + std::to_string(labels.size()));
  }
  const std::size_t rows = s.rows();
  const double scale = 1.0 / static_cast<double>(rows);
  LossWithGrad out{0.0, Matrix(rows, rows)};
  for (std::size_t i = 0; i < rows; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < rows; ++j) {
      const double label = labels(i, j);
      const double z = label * (s(i, j) / temperature + bias);
      row_sum += log1p_exp(-z);
      out.grad(i, j) = scale * (-label / temperature) * sigmoid(-z);
    }
    out.value += row_sum;
  }
  out.value *= scale;
  return out;
}

// Margin schedule: zero the loss for suspected label noise (d < beta),
// enlarge it for hard pairs, cap at m0 once separated.
inline double adaptive_margin(double d, const LossConfig& cfg) {
  const double m0 = cfg.base_margin;
  const double beta = cfg.cutoff;
  if (d < beta) return d;
  if (d <= m0) return ((m0 - d) / (m0 - beta) * cfg.margin_scale + 1.0) * m0;
  return m0;
}

// Inverted slope: the margin grows with d, reaching (gamma+1)*m0 at d = m0.
inline double inverse_adaptive_margin(double d, const LossConfig& cfg) {
  const double m0 = cfg.base_margin;
  const double beta = cfg.cutoff;
  if (d < beta) return d;
  if (d <= m0) return ((d - beta) / (m0 - beta) * cfg.margin_scale + 1.0) * m0;
  return (cfg.margin_scale + 1.0) * m0;
}

inline double margin_for_mode(double d, const LossConfig& cfg) {
  switch (cfg.margin_mode) {
    case MarginMode::kFixed: return cfg.base_margin;
    case MarginMode::kAdaptive: return adaptive_margin(d, cfg);
    case MarginMode::kAdaptiveInverse: return inverse_adaptive_margin(d, cfg);
    case MarginMode::kNone: break;
  }
  throw Error(ErrorCode::kInvalidMode,
              "no margin defined for mode " + std::string(margin_mode_name(cfg.margin_mode)));
}

// The three ranking components, each already averaged over anchors. The
// real-negative component includes alpha.
struct MarginTerms {
  double positive_vs_hard = 0.0;
  double hard_vs_easy = 0.0;
  double positive_vs_real = 0.0;
};

struct MarginLoss {
  double value = 0.0;
  Matrix grad;
  MarginTerms terms;
};

namespace detail {

enum class AnchorSide { kImage, kText };

inline MarginLoss margin_loss(const Matrix& s, std::size_t n, const LossConfig& cfg,
                              AnchorSide side) {
  if (n == 0 || s.rows() != 3 * n || s.cols() != 3 * n) {
    throw Error(ErrorCode::kShapeMismatch, "similarity " + std::to_string(s.rows()) + "x" +
                                               std::to_string(s.cols()) + " for n=" +
                                               std::to_string(n));
  }
  if (cfg.margin_mode == MarginMode::kNone) {
    throw Error(ErrorCode::kInvalidMode, "margin loss requires a margin mode");
  }
  const std::size_t rows = 3 * n;
  const double anchor_scale = 1.0 / static_cast<double>(rows);
  MarginLoss out{0.0, Matrix(rows, rows), {}};

  // (anchor, other) -> flat index into S.
  auto at = [&](std::size_t anchor, std::size_t other) {
    return side == AnchorSide::kImage ? anchor * rows + other : other * rows + anchor;
  };
  const auto sim = s.data();
  auto grad = out.grad.data();

  auto block = [&](std::size_t anchor, const std::vector<std::size_t>& winners,
                   const std::vector<std::size_t>& losers, double weight) {
    if (winners.empty() || losers.empty()) return 0.0;
    const double w = weight / static_cast<double>(winners.size() * losers.size());
    const double g = w * anchor_scale;
    double sum = 0.0;
    for (std::size_t j1 : winners) {
      for (std::size_t j2 : losers) {
        const double d = sim[at(anchor, j1)] - sim[at(anchor, j2)];
        const double hinge = margin_for_mode(d, cfg) - d;
        if (hinge > 0.0) {
          sum += hinge;
          grad[at(anchor, j1)] -= g;
          grad[at(anchor, j2)] += g;
        }
      }
    }
    return w * sum;
  };

  for (std::size_t a = 0; a < rows; ++a) {
    const PairSets sets = side == AnchorSide::kImage ? caption_sets_for_image(a, n)
                                                     : image_sets_for_caption(a, n);
    const double ph = block(a, sets.positive, sets.hard_negative, 1.0);
    const double he = block(a, sets.hard_negative, sets.easy_negative, 1.0);
    const double pr = block(a, sets.positive, sets.real_negative, cfg.real_negative_weight);
    out.terms.positive_vs_hard += ph;
    out.terms.hard_vs_easy += he;
    out.terms.positive_vs_real += pr;
    out.value += ph + he + pr;
  }
  out.value *= anchor_scale;
  out.terms.positive_vs_hard *= anchor_scale;
  out.terms.hard_vs_easy *= anchor_scale;
  out.terms.positive_vs_real *= anchor_scale;
  return out;
}

}  // namespace detail

inline MarginLoss margin_loss_image_side(const Matrix& s, std::size_t n, const LossConfig& cfg) {
  return detail::margin_loss(s, n, cfg, detail::AnchorSide::kImage);
}

inline MarginLoss margin_loss_text_side(const Matrix& s, std::size_t n, const LossConfig& cfg) {
  return detail::margin_loss(s, n, cfg, detail::AnchorSide::kText);
}

struct LossParts {
  double contrastive = 0.0;
  double margin_image = 0.0;
  double margin_text = 0.0;
  MarginTerms image_terms;
  MarginTerms text_terms;
};

struct TotalLoss {
  double value = 0.0;
  Matrix grad;
  LossParts parts;
};

// With lambda == 0 the margin terms are skipped and reported as 0.
inline TotalLoss total_loss(const Matrix& s, const AlignmentMatrix& labels, std::size_t n,
                            const LossConfig& cfg) {
  cfg.validate();
  if (cfg.margin_mode == MarginMode::kNone && cfg.margin_weight > 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "margin_mode none requires margin_weight = 0");
  }
  const LossWithGrad con = sigmoid_contrastive_loss(s, labels, cfg.temperature, cfg.bias);
  TotalLoss out{con.value, con.grad, {}};
  out.parts.contrastive = con.value;
  if (cfg.margin_weight == 0.0) return out;

  const MarginLoss img = margin_loss_image_side(s, n, cfg);
  const MarginLoss txt = margin_loss_text_side(s, n, cfg);
  out.parts.margin_image = img.value;
  out.parts.margin_text = txt.value;
  out.parts.image_terms = img.terms;
  out.parts.text_terms = txt.terms;
  out.value = con.value + cfg.margin_weight * (img.value + txt.value);
  auto g = out.grad.data();
  const auto gi = img.grad.data();
  const auto gt = txt.grad.data();
  for (std::size_t k = 0; k < g.size(); ++k) g[k] += cfg.margin_weight * (gi[k] + gt[k]);
  return out;
}

}  // namespace sparcl
