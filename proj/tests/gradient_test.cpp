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

#include <random>

#include <gtest/gtest.h>

#include "gradient_checks.hpp"
#include "oracles.hpp"
#include "sparcl/trainer.hpp"

namespace sparcl {
namespace {

class GradientByMode : public ::testing::TestWithParam<MarginMode> {};

TEST_P(GradientByMode, SimilarityGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (std::size_t n : {1u, 2u, 3u}) {
      const auto r = gradcheck::check_similarity_gradient(seed, GetParam(), n);
      EXPECT_LT(r.max_rel_error, 1e-5) << "seed " << seed << " n " << n;
    }
  }
}

TEST_P(GradientByMode, WeightGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = gradcheck::check_weight_gradient(seed, GetParam());
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, GradientByMode,
                         ::testing::Values(MarginMode::kFixed, MarginMode::kAdaptive,
                                           MarginMode::kAdaptiveInverse),
                         [](const auto& info) { return std::string(margin_mode_name(info.param)); });

TEST(Gradient, ContrastiveOnlyWeightGradient) {
  std::mt19937_64 gen(5);
  LossConfig cfg;
  cfg.margin_weight = 0.0;
  cfg.margin_mode = MarginMode::kNone;
  const auto p = gradcheck::draw_weight_problem(gen);
  const Matrix base = gradcheck::similarity_of(p, p.params.image_proj, p.params.text_proj);
  const BatchEvaluation ev =
      evaluate_batch(p.params, p.images, p.captions, alignment_matrix(2), 2, cfg);
  const Matrix num = oracle::central_difference(
      [&](const Matrix& w) {
        return oracle::naive_contrastive(gradcheck::similarity_of(p, w, p.params.text_proj), 2,
                                         cfg.temperature, cfg.bias);
      },
      p.params.image_proj, 1e-5);
  EXPECT_LT(oracle::max_relative_error(ev.grads.image_proj, num, 1e-3), 1e-4);
  EXPECT_NEAR(ev.loss.value, oracle::naive_contrastive(base, 2, cfg.temperature, cfg.bias),
              1e-10);
}

TEST(Encode, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 gen(6);
  const Matrix x = oracle::random_gaussian(gen, 5, 7);
  const Matrix w = oracle::random_gaussian(gen, 7, 4);
  const Matrix upstream = oracle::random_gaussian(gen, 5, 4);
  // f(W) = <upstream, normalize(xW)>
  auto f = [&](const Matrix& wv) {
    const Matrix u = l2_normalize_rows(matmul(x, wv));
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += u.data()[k] * upstream.data()[k];
    return s;
  };
  const Encoded enc = encode_with_norms(w, x);
  const Matrix analytic = encode_backward(x, enc, upstream);
  const Matrix numeric = oracle::central_difference(f, w, 1e-6);
  EXPECT_LT(oracle::max_relative_error(analytic, numeric, 1e-6), 1e-5);
}

TEST(Encode, IdentityPaddedProjectionKeepsUnitRows) {
  Matrix w(4, 2);
  w(0, 0) = 1.0;
  w(1, 1) = 1.0;
  const Matrix x{{0.6, 0.8, 5.0, -3.0}, {1.0, 0.0, 2.0, 2.0}};
  EncoderParams p{w, w};
  const Matrix u = encode(p, x, Modality::kImage);
  EXPECT_NEAR(u(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(u(0, 1), 0.8, 1e-15);
  EXPECT_NEAR(u(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(u(1, 1), 0.0, 1e-15);
}

TEST(Encode, ScaleInvariant) {
  std::mt19937_64 gen(7);
  const Matrix x = oracle::random_gaussian(gen, 6, 5);
  Matrix x10 = x;
  for (double& v : x10.data()) v *= 10.0;
  const EncoderParams p{oracle::random_gaussian(gen, 5, 3), oracle::random_gaussian(gen, 5, 3)};
  const Matrix a = encode(p, x, Modality::kText);
  const Matrix b = encode(p, x10, Modality::kText);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a.data()[k], b.data()[k], 1e-14);
}

TEST(Encode, Errors) {
  const EncoderParams p{Matrix(3, 2, 1.0), Matrix(3, 2, 1.0)};
  try {
    encode(p, Matrix(2, 4, 1.0), Modality::kImage);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimMismatch);
  }
  try {
    encode(p, Matrix{{1.0, -1.0, 0.0}}, Modality::kImage);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroRow);
  }
}

}  // namespace
}  // namespace sparcl
