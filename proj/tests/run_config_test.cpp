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

#include "sparcl/run_config.hpp"

#include <string>

#include <gtest/gtest.h>

namespace sparcl {
namespace {

std::string config_error(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    return e.what();
  }
  return "";
}

TEST(RunConfig, EmptyDocumentGivesDefaults) {
  const TrainConfig c = parse_run_config(std::string("{}"));
  EXPECT_EQ(to_json(c), to_json(TrainConfig{}));
  EXPECT_EQ(c.loss.temperature, 0.01);
  EXPECT_EQ(c.loss.bias, -30.0);
  EXPECT_EQ(c.loss.margin_weight, 0.01);
  EXPECT_EQ(c.loss.real_negative_weight, 10.0);
  EXPECT_EQ(c.loss.base_margin, 0.005);
  EXPECT_EQ(c.loss.cutoff, -0.02);
  EXPECT_EQ(c.loss.margin_scale, 1.0);
  EXPECT_EQ(c.base_lr, 0.01);
  EXPECT_EQ(c.weight_decay, 0.5);
}

TEST(RunConfig, SectionsApply) {
  const TrainConfig c = parse_run_config(std::string(R"({
    "world": {"num_objects": 6, "p_bad_pos": 0.25, "seed": 9, "role_scale": 0.5},
    "loss": {"margin_mode": "adaptive_inverse", "real_negative_weight": 3},
    "train": {"total_steps": 11, "embed_dim": 8, "data_mode": "full"}
  })"));
  EXPECT_EQ(c.world.num_objects, 6u);
  EXPECT_EQ(c.world.p_bad_pos, 0.25);
  EXPECT_EQ(c.world.seed, 9u);
  EXPECT_EQ(c.world.role_scale, 0.5);
  EXPECT_EQ(c.loss.margin_mode, MarginMode::kAdaptiveInverse);
  EXPECT_EQ(c.loss.real_negative_weight, 3.0);
  EXPECT_EQ(c.total_steps, 11u);
  EXPECT_EQ(c.embed_dim, 8u);
}

TEST(RunConfig, EchoRoundTrips) {
  TrainConfig c;
  c.world.num_attributes = 5;
  c.loss.margin_mode = MarginMode::kFixed;
  c.seed = 44;
  c.data_mode = DataMode::kFull;
  const TrainConfig back = parse_run_config(to_json(c).dump());
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(RunConfig, UnknownKeysAreNamed) {
  EXPECT_NE(config_error(R"({"wrld": {}})").find("'wrld'"), std::string::npos);
  EXPECT_NE(config_error(R"({"loss": {"lambda": 1}})").find("'loss.lambda'"), std::string::npos);
  EXPECT_NE(config_error(R"({"world": {"V_obj": 3}})").find("'world.V_obj'"), std::string::npos);
}

TEST(RunConfig, BadValuesRejected) {
  EXPECT_NE(config_error(R"({"train": {"total_steps": -1}})").find("train.total_steps"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"train": {"total_steps": 1.5}})").find("train.total_steps"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"loss": {"temperature": "hot"}})").find("loss.temperature"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"loss": {"margin_mode": "sometimes"}})").find("sometimes"),
            std::string::npos);
  EXPECT_FALSE(config_error(R"({"loss": {"temperature": 0}})").empty());
  EXPECT_FALSE(config_error(R"({"loss": {"margin_mode": "none"}})").empty());
  EXPECT_FALSE(config_error(R"([1, 2])").empty());
  EXPECT_FALSE(config_error("{not json").empty());
  EXPECT_FALSE(config_error(R"({"world": 3})").empty());
}

TEST(RunConfig, NoneModeWithZeroWeightIsValid) {
  const TrainConfig c =
      parse_run_config(std::string(R"({"loss": {"margin_mode": "none", "margin_weight": 0}})"));
  EXPECT_EQ(c.loss.margin_mode, MarginMode::kNone);
}

}  // namespace
}  // namespace sparcl
