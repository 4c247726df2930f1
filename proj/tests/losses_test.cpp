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

#include "sparcl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sparcl/batching.hpp"

namespace sparcl {
namespace {

LossConfig with_mode(MarginMode mode) {
  LossConfig c;
  c.margin_mode = mode;
  return c;
}

constexpr MarginMode kMarginModes[] = {MarginMode::kFixed, MarginMode::kAdaptive,
                                       MarginMode::kAdaptiveInverse};

TEST(ContrastiveLoss, SinglePairClosedForms) {
  AlignmentMatrix pos(1, +1), neg(1, -1);
  const Matrix s{{0.5}};
  // log(1 + e^-20) = e^-20 - e^-40/2 + ...
  EXPECT_NEAR(sigmoid_contrastive_loss(s, pos, 0.01, -30.0).value, 2.0611536203143808e-9, 1e-18);
  EXPECT_NEAR(sigmoid_contrastive_loss(s, neg, 0.01, -30.0).value, 20.000000002061153, 1e-9);
  EXPECT_NEAR(sigmoid_contrastive_loss(Matrix{{0.3}}, pos, 0.01, -30.0).value, std::log(2.0),
              1e-12);
}

TEST(ContrastiveLoss, NineTermHandSum) {
  Matrix s(3, 3, 0.1);
  for (std::size_t i = 0; i < 3; ++i) s(i, i) = 0.9;
  const AlignmentMatrix m = alignment_matrix(1);
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      sum += std::log1p(std::exp(-m(i, j) * (s(i, j) / 0.01 - 30.0)));
    }
  }
  EXPECT_NEAR(sigmoid_contrastive_loss(s, m, 0.01, -30.0).value, sum / 3.0, 1e-12);
}

TEST(ContrastiveLoss, MatchesOracleOnRandomBatches) {
  std::mt19937_64 gen(21);
  for (std::size_t n : {1u, 2u, 3u, 5u}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix s = oracle::random_matrix(gen, 3 * n, 3 * n);
      EXPECT_NEAR(sigmoid_contrastive_loss(s, alignment_matrix(n), 0.01, -30.0).value,
                  oracle::naive_contrastive(s, n, 0.01, -30.0), 1e-10);
    }
  }
}

TEST(ContrastiveLoss, GradientSignFollowsLabels) {
  std::mt19937_64 gen(22);
  const std::size_t n = 3;
  const Matrix s = oracle::random_matrix(gen, 9, 9);
  const AlignmentMatrix m = alignment_matrix(n);
  const LossWithGrad out = sigmoid_contrastive_loss(s, m, 0.01, -30.0);
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 9; ++j) {
      if (m(i, j) > 0) EXPECT_LE(out.grad(i, j), 0.0);
      else EXPECT_GE(out.grad(i, j), 0.0);
    }
  }
}

TEST(ContrastiveLoss, ShapeMismatch) {
  try {
    sigmoid_contrastive_loss(Matrix(3, 3), alignment_matrix(2), 0.01, -30.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(AdaptiveMargin, ScheduleValues) {
  const LossConfig c;
  EXPECT_DOUBLE_EQ(adaptive_margin(-0.05, c), -0.05);
  EXPECT_NEAR(adaptive_margin(0.0, c), 0.006, 1e-12);
  EXPECT_NEAR(adaptive_margin(-0.02, c), 0.01, 1e-12);
  EXPECT_NEAR(adaptive_margin(0.005, c), 0.005, 1e-12);
  EXPECT_DOUBLE_EQ(adaptive_margin(0.04, c), 0.005);
}

TEST(AdaptiveMargin, ShapeOfSchedule) {
  const LossConfig c;
  double prev = adaptive_margin(c.cutoff, c);
  for (double d = c.cutoff; d <= 0.05; d += 1e-5) {
    const double m = adaptive_margin(d, c);
    if (d <= c.base_margin) EXPECT_LE(m, prev + 1e-15);
    else EXPECT_DOUBLE_EQ(m, c.base_margin);
    EXPECT_LE(std::abs(m - prev), 1e-5 * c.margin_scale * c.base_margin / 0.025 + 1e-12);
    prev = m;
  }
  EXPECT_NEAR(adaptive_margin(c.base_margin, c), adaptive_margin(c.base_margin + 1e-15, c),
              1e-12);
  const double below = adaptive_margin(std::nextafter(c.cutoff, -1.0), c);
  EXPECT_NEAR(below, c.cutoff, 1e-15);
  EXPECT_NEAR(adaptive_margin(c.cutoff, c), (c.margin_scale + 1.0) * c.base_margin, 1e-15);
}

TEST(MarginForMode, FixedAndInverse) {
  LossConfig c = with_mode(MarginMode::kFixed);
  for (double d : {-0.5, -0.02, 0.0, 0.3}) EXPECT_DOUBLE_EQ(margin_for_mode(d, c), 0.005);
  c.margin_mode = MarginMode::kAdaptiveInverse;
  EXPECT_NEAR(margin_for_mode(-0.02, c), 0.005, 1e-15);
  EXPECT_NEAR(margin_for_mode(0.005, c), 0.01, 1e-15);
  EXPECT_NEAR(margin_for_mode(0.5, c), 0.01, 1e-15);
  EXPECT_DOUBLE_EQ(margin_for_mode(-0.05, c), -0.05);
  c.margin_mode = MarginMode::kAdaptive;
  EXPECT_NEAR(margin_for_mode(0.0, c), 0.006, 1e-15);
  c.margin_mode = MarginMode::kNone;
  try {
    margin_for_mode(0.0, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidMode);
  }
}

TEST(MarginForMode, AgreesWithOracleEverywhere) {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (MarginMode mode : kMarginModes) {
    LossConfig c = with_mode(mode);
    for (int i = 0; i < 2000; ++i) {
      const double d = u(gen);
      EXPECT_NEAR(margin_for_mode(d, c), oracle::naive_margin(d, c), 1e-15);
    }
  }
}

TEST(MarginLoss, SingleGroupOnlyHardTerm) {
  std::mt19937_64 gen(24);
  for (MarginMode mode : kMarginModes) {
    const LossConfig c = with_mode(mode);
    const Matrix s = oracle::random_matrix(gen, 3, 3, -0.05, 0.05);
    const MarginLoss img = margin_loss_image_side(s, 1, c);
    EXPECT_EQ(img.terms.hard_vs_easy, 0.0);
    EXPECT_EQ(img.terms.positive_vs_real, 0.0);
    EXPECT_NEAR(img.value, img.terms.positive_vs_hard, 1e-15);
  }
}

TEST(MarginLoss, MatchesOracleOnRandomBatches) {
  std::mt19937_64 gen(25);
  for (MarginMode mode : kMarginModes) {
    const LossConfig c = with_mode(mode);
    for (std::size_t n : {1u, 2u, 3u, 4u}) {
      for (int trial = 0; trial < 20; ++trial) {
        // Narrow similarity spread so every margin branch is exercised.
        const Matrix s = oracle::random_matrix(gen, 3 * n, 3 * n, -0.03, 0.03);
        EXPECT_NEAR(margin_loss_image_side(s, n, c).value,
                    oracle::naive_margin_loss(s, n, c, oracle::Side::kImage), 1e-10);
        EXPECT_NEAR(margin_loss_text_side(s, n, c).value,
                    oracle::naive_margin_loss(s, n, c, oracle::Side::kText), 1e-10);
      }
    }
  }
}

TEST(MarginLoss, ZeroRegionsTermByTerm) {
  const LossConfig c = with_mode(MarginMode::kAdaptive);
  // Individual hinge terms on both sides of [beta, m0].
  for (double d = -1.0; d < c.cutoff; d += 1e-3) {
    EXPECT_EQ(std::max(0.0, adaptive_margin(d, c) - d), 0.0) << d;
  }
  for (double d = c.base_margin + 1e-6; d < 1.0; d += 1e-3) {
    EXPECT_EQ(std::max(0.0, adaptive_margin(d, c) - d), 0.0) << d;
  }
  // Distinct entries spaced 0.03 apart put every difference outside [beta, m0],
  // so whole losses and gradients vanish exactly.
  const std::size_t n = 2;
  std::mt19937_64 gen(26);
  std::vector<int> ranks(36);
  for (int k = 0; k < 36; ++k) ranks[k] = k;
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(ranks.begin(), ranks.end(), gen);
    Matrix s(3 * n, 3 * n);
    for (std::size_t k = 0; k < s.size(); ++k) s.data()[k] = -0.5 + 0.03 * ranks[k];
    for (const MarginLoss& side :
         {margin_loss_image_side(s, n, c), margin_loss_text_side(s, n, c)}) {
      EXPECT_EQ(side.value, 0.0);
      for (double g : side.grad.data()) EXPECT_EQ(g, 0.0);
    }
  }
}

TEST(MarginLoss, TransposeSwapsSides) {
  std::mt19937_64 gen(27);
  for (MarginMode mode : kMarginModes) {
    const LossConfig c = with_mode(mode);
    for (std::size_t n : {1u, 2u, 3u}) {
      const Matrix s = oracle::random_matrix(gen, 3 * n, 3 * n, -0.03, 0.03);
      const Matrix st = transpose(s);
      EXPECT_EQ(margin_loss_image_side(s, n, c).value, margin_loss_text_side(st, n, c).value);
      EXPECT_EQ(margin_loss_text_side(s, n, c).value, margin_loss_image_side(st, n, c).value);
    }
  }
}

TEST(MarginLoss, SymmetricSingleGroupSidesAgree) {
  std::mt19937_64 gen(28);
  const LossConfig c = with_mode(MarginMode::kAdaptive);
  Matrix s = oracle::random_matrix(gen, 3, 3, -0.03, 0.03);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < i; ++j) s(i, j) = s(j, i);
  }
  EXPECT_NEAR(margin_loss_image_side(s, 1, c).value, margin_loss_text_side(s, 1, c).value, 1e-15);
}

TEST(MarginLoss, AlphaScalesOnlyRealComponent) {
  std::mt19937_64 gen(29);
  for (MarginMode mode : kMarginModes) {
    LossConfig c = with_mode(mode);
    const Matrix s = oracle::random_matrix(gen, 9, 9, -0.03, 0.03);
    c.real_negative_weight = 1.0;
    const MarginTerms a = margin_loss_image_side(s, 3, c).terms;
    c.real_negative_weight = 7.5;
    const MarginTerms b = margin_loss_image_side(s, 3, c).terms;
    EXPECT_EQ(a.positive_vs_hard, b.positive_vs_hard);
    EXPECT_EQ(a.hard_vs_easy, b.hard_vs_easy);
    EXPECT_NEAR(b.positive_vs_real, 7.5 * a.positive_vs_real, 1e-15);
  }
}

TEST(MarginLoss, RaisingAPositiveNeverHurts) {
  std::mt19937_64 gen(30);
  const std::size_t n = 3;
  for (MarginMode mode : kMarginModes) {
    LossConfig c = with_mode(mode);
    c.margin_weight = 1.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix s = oracle::random_matrix(gen, 3 * n, 3 * n, -0.03, 0.03);
      if (oracle::kink_distance(s, n, c) < 1e-4) continue;
      const double before = margin_loss_image_side(s, n, c).value;
      for (std::size_t i = 0; i < 3 * n; ++i) {
        for (std::size_t j : caption_sets_for_image(i, n).positive) {
          Matrix t = s;
          t(i, j) += 5e-5;
          EXPECT_LE(margin_loss_image_side(t, n, c).value, before + 1e-15);
        }
      }
    }
  }
}

TEST(TotalLoss, ZeroWeightIsContrastiveOnly) {
  std::mt19937_64 gen(31);
  LossConfig c;
  c.margin_weight = 0.0;
  const Matrix s = oracle::random_matrix(gen, 6, 6);
  const TotalLoss t = total_loss(s, alignment_matrix(2), 2, c);
  EXPECT_EQ(t.value, sigmoid_contrastive_loss(s, alignment_matrix(2), 0.01, -30.0).value);
  EXPECT_EQ(t.parts.margin_image, 0.0);
  EXPECT_EQ(t.parts.margin_text, 0.0);
  c.margin_mode = MarginMode::kNone;
  EXPECT_EQ(total_loss(s, alignment_matrix(2), 2, c).value, t.value);
}

TEST(TotalLoss, NoneModeWithWeightIsInvalid) {
  LossConfig c = with_mode(MarginMode::kNone);
  try {
    total_loss(Matrix(3, 3), alignment_matrix(1), 1, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
  }
}

TEST(TotalLoss, RecomposesFromParts) {
  std::mt19937_64 gen(32);
  for (MarginMode mode : kMarginModes) {
    const LossConfig c = with_mode(mode);
    const Matrix s = oracle::random_matrix(gen, 6, 6, -0.05, 0.05);
    const TotalLoss t = total_loss(s, alignment_matrix(2), 2, c);
    const double con = sigmoid_contrastive_loss(s, alignment_matrix(2), 0.01, -30.0).value;
    const double img = margin_loss_image_side(s, 2, c).value;
    const double txt = margin_loss_text_side(s, 2, c).value;
    EXPECT_NEAR(t.value, con + 0.01 * (img + txt), 1e-12);
    EXPECT_NEAR(t.value, oracle::naive_total(s, 2, c), 1e-10);
    EXPECT_EQ(t.parts.contrastive, con);
    EXPECT_EQ(t.parts.margin_image, img);
    EXPECT_EQ(t.parts.margin_text, txt);
  }
}

TEST(LossConfig, ValidateRanges) {
  auto invalid = [](LossConfig c) {
    try {
      c.validate();
      return false;
    } catch (const Error& e) {
      return e.code() == ErrorCode::kInvalidConfig;
    }
  };
  LossConfig c;
  EXPECT_FALSE(invalid(c));
  c.temperature = 0.0;
  EXPECT_TRUE(invalid(c));
  c = LossConfig{};
  c.cutoff = 0.01;
  EXPECT_TRUE(invalid(c));
  c = LossConfig{};
  c.real_negative_weight = 0.5;
  EXPECT_TRUE(invalid(c));
  c = LossConfig{};
  c.margin_weight = -1.0;
  EXPECT_TRUE(invalid(c));
}

TEST(MarginMode, NamesRoundTrip) {
  for (MarginMode m : {MarginMode::kNone, MarginMode::kFixed, MarginMode::kAdaptive,
                       MarginMode::kAdaptiveInverse}) {
    EXPECT_EQ(parse_margin_mode(margin_mode_name(m)), m);
  }
  EXPECT_FALSE(parse_margin_mode("adaptive-inverse").has_value());
}

}  // namespace
}  // namespace sparcl
