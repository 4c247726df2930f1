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

// Run configuration files: a JSON document with optional "world", "loss"
// and "train" sections. Every key is optional and defaults to the values in
// the config structs; unknown keys and wrongly typed values are rejected
// before any work starts.
//
//   {
//     "world": {"num_objects": 8, "p_bad_pos": 0.1, "seed": 7},
//     "loss":  {"margin_mode": "adaptive", "margin_weight": 0.01},
//     "train": {"total_steps": 2000, "embed_dim": 16}
//   }

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "sparcl/binary_io.hpp"
#include "sparcl/error.hpp"
#include "sparcl/losses.hpp"
#include "sparcl/toyworld.hpp"
#include "sparcl/trainer.hpp"

namespace sparcl {

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const WorldConfig& c) {
  ordered_json j;
  j["num_objects"] = c.num_objects;
  j["num_attributes"] = c.num_attributes;
  j["num_relations"] = c.num_relations;
  j["image_dim"] = c.image_dim;
  j["text_dim"] = c.text_dim;
  j["image_noise"] = c.image_noise;
  j["text_noise"] = c.text_noise;
  j["p_bad_pos"] = c.p_bad_pos;
  j["p_easy_neg"] = c.p_easy_neg;
  j["role_scale"] = c.role_scale;
  j["detail_scale"] = c.detail_scale;
  j["seed"] = c.seed;
  return j;
}

inline ordered_json to_json(const LossConfig& c) {
  ordered_json j;
  j["temperature"] = c.temperature;
  j["bias"] = c.bias;
  j["margin_weight"] = c.margin_weight;
  j["real_negative_weight"] = c.real_negative_weight;
  j["base_margin"] = c.base_margin;
  j["cutoff"] = c.cutoff;
  j["margin_scale"] = c.margin_scale;
  j["margin_mode"] = std::string(margin_mode_name(c.margin_mode));
  return j;
}

inline ordered_json to_json(const TrainConfig& c) {
  ordered_json train;
  train["groups_per_batch"] = c.groups_per_batch;
  train["total_steps"] = c.total_steps;
  train["base_lr"] = c.base_lr;
  train["weight_decay"] = c.weight_decay;
  train["adam_beta1"] = c.adam_beta1;
  train["adam_beta2"] = c.adam_beta2;
  train["adam_eps"] = c.adam_eps;
  train["seed"] = c.seed;
  train["embed_dim"] = c.embed_dim;
  train["eval_cases"] = c.eval_cases;
  train["data_mode"] = std::string(data_mode_name(c.data_mode));
  ordered_json j;
  j["world"] = to_json(c.world);
  j["loss"] = to_json(c.loss);
  j["train"] = std::move(train);
  return j;
}

namespace detail {

// Applies each key of `section` through its registered setter.
class SectionReader {
 public:
  explicit SectionReader(std::string name) : name_(std::move(name)) {}

  template <typename T>
  SectionReader& field(const std::string& key, T& target) {
    setters_[key] = [this, key, &target](const nlohmann::json& v) {
      try {
        if constexpr (std::is_same_v<T, double>) {
          if (!v.is_number()) throw Error(ErrorCode::kInvalidConfig, "");
        } else if constexpr (std::is_integral_v<T>) {
          if (!v.is_number_integer()) throw Error(ErrorCode::kInvalidConfig, "");
          if (v.is_number_integer() && !v.is_number_unsigned()) {
            throw Error(ErrorCode::kInvalidConfig, "");
          }
        }
        target = v.get<T>();
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidConfig,
                    "bad value for key '" + name_ + "." + key + "': " + v.dump());
      }
    };
    return *this;
  }

  SectionReader& custom(const std::string& key, std::function<void(const nlohmann::json&)> fn) {
    setters_[key] = std::move(fn);
    return *this;
  }

  void apply(const nlohmann::json& section) const {
    if (!section.is_object()) {
      throw Error(ErrorCode::kInvalidConfig, "section '" + name_ + "' must be an object");
    }
    for (const auto& [key, value] : section.items()) {
      const auto it = setters_.find(key);
      if (it == setters_.end()) {
        throw Error(ErrorCode::kInvalidConfig, "unknown key '" + name_ + "." + key + "'");
      }
      it->second(value);
    }
  }

 private:
  std::string name_;
  std::map<std::string, std::function<void(const nlohmann::json&)>> setters_;
};

}  // namespace detail

inline void apply_world_section(const nlohmann::json& j, WorldConfig& c) {
  detail::SectionReader("world")
      .field("num_objects", c.num_objects)
      .field("num_attributes", c.num_attributes)
      .field("num_relations", c.num_relations)
      .field("image_dim", c.image_dim)
      .field("text_dim", c.text_dim)
      .field("image_noise", c.image_noise)
      .field("text_noise", c.text_noise)
      .field("p_bad_pos", c.p_bad_pos)
      .field("p_easy_neg", c.p_easy_neg)
      .field("role_scale", c.role_scale)
      .field("detail_scale", c.detail_scale)
      .field("seed", c.seed)
      .apply(j);
}

inline void apply_loss_section(const nlohmann::json& j, LossConfig& c) {
  detail::SectionReader("loss")
      .field("temperature", c.temperature)
      .field("bias", c.bias)
      .field("margin_weight", c.margin_weight)
      .field("real_negative_weight", c.real_negative_weight)
      .field("base_margin", c.base_margin)
      .field("cutoff", c.cutoff)
      .field("margin_scale", c.margin_scale)
      .custom("margin_mode",
              [&c](const nlohmann::json& v) {
                const auto m = v.is_string() ? parse_margin_mode(v.get<std::string>())
                                             : std::nullopt;
                if (!m) {
                  throw Error(ErrorCode::kInvalidConfig,
                              "bad value for key 'loss.margin_mode': " + v.dump());
                }
                c.margin_mode = *m;
              })
      .apply(j);
}

inline void apply_train_section(const nlohmann::json& j, TrainConfig& c) {
  detail::SectionReader("train")
      .field("groups_per_batch", c.groups_per_batch)
      .field("total_steps", c.total_steps)
      .field("base_lr", c.base_lr)
      .field("weight_decay", c.weight_decay)
      .field("adam_beta1", c.adam_beta1)
      .field("adam_beta2", c.adam_beta2)
      .field("adam_eps", c.adam_eps)
      .field("seed", c.seed)
      .field("embed_dim", c.embed_dim)
      .field("eval_cases", c.eval_cases)
      .custom("data_mode",
              [&c](const nlohmann::json& v) {
                const auto m =
                    v.is_string() ? parse_data_mode(v.get<std::string>()) : std::nullopt;
                if (!m) {
                  throw Error(ErrorCode::kInvalidConfig,
                              "bad value for key 'train.data_mode': " + v.dump());
                }
                c.data_mode = *m;
              })
      .apply(j);
}

// Parses and validates a run config document.
inline TrainConfig parse_run_config(const nlohmann::json& root) {
  if (!root.is_object()) throw Error(ErrorCode::kInvalidConfig, "config must be a JSON object");
  TrainConfig cfg;
  for (const auto& [key, value] : root.items()) {
    if (key == "world") {
      apply_world_section(value, cfg.world);
    } else if (key == "loss") {
      apply_loss_section(value, cfg.loss);
    } else if (key == "train") {
      apply_train_section(value, cfg);
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline TrainConfig parse_run_config(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(root);
}

inline TrainConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(io::read_file(path));
}

}  // namespace sparcl
