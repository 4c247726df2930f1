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

// Prompt-embedding and feature-map transforms applied before image
// generation:
//
//   inject_image_features  keeps rows 1..k of an L×d prompt embedding
//                          (content up to and including EOS) and overwrites
//                          the L-k padding rows with one image embedding.
//   adain                  renormalizes each content channel to the style
//                          map's channel mean and standard deviation.
//
// Sequences are exchanged with external pipelines through a small file
// format: a one-line JSON header, L*d little-endian float32 values, and an
// 8-byte little-endian FNV-1a checksum of the float payload.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparcl/binary_io.hpp"
#include "sparcl/error.hpp"
#include "sparcl/numkit.hpp"

namespace sparcl {

struct EmbeddingSequence {
  Matrix rows;               // L × d
  std::size_t eos_index = 1; // 1-based position of the EOS embedding

  std::size_t length() const noexcept { return rows.rows(); }
  std::size_t dim() const noexcept { return rows.cols(); }

  void validate() const {
    if (length() == 0 || dim() == 0) {
      throw Error(ErrorCode::kInvalidParams, "embedding sequence must be non-empty");
    }
    if (eos_index < 1 || eos_index > length()) {
      throw Error(ErrorCode::kInvalidParams, "eos index " + std::to_string(eos_index) +
                                                 " outside [1, " + std::to_string(length()) +
                                                 "]");
    }
  }
};

struct ImageEmbedding {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
};

inline EmbeddingSequence inject_image_features(const EmbeddingSequence& seq,
                                               const ImageEmbedding& image) {
  seq.validate();
  if (image.dim() != seq.dim()) {
    throw Error(ErrorCode::kDimMismatch, "image embedding dim " + std::to_string(image.dim()) +
                                             " vs sequence dim " + std::to_string(seq.dim()));
  }
  EmbeddingSequence out = seq;
  for (std::size_t r = seq.eos_index; r < seq.length(); ++r) {
    std::copy(image.values.begin(), image.values.end(), out.rows.row(r).begin());
  }
  return out;
}

inline constexpr double kAdainEps = 1e-5;

// Style may have a different spatial size than content; channels must agree.
inline FeatureMap adain(const FeatureMap& content, const FeatureMap& style,
                        double eps = kAdainEps) {
  if (content.channels != style.channels) {
    throw Error(ErrorCode::kChannelMismatch, "content has " + std::to_string(content.channels) +
                                                 " channels, style has " +
                                                 std::to_string(style.channels));
  }
  const ChannelStats cs = channel_stats(content, eps);
  const ChannelStats ss = channel_stats(style, eps);
  FeatureMap out = content;
  for (std::size_t c = 0; c < content.channels; ++c) {
    if (!(cs.stddev[c] > 0.0)) {
      throw Error(ErrorCode::kInvalidParams,
                  "constant content channel " + std::to_string(c) + " needs eps > 0");
    }
    const double gain = ss.stddev[c] / cs.stddev[c];
    for (double& x : out.channel(c)) x = ss.mean[c] + gain * (x - cs.mean[c]);
  }
  return out;
}

inline std::string encode_sequence(const EmbeddingSequence& seq) {
  seq.validate();
  nlohmann::ordered_json header;
  header["version"] = 1;
  header["L"] = seq.length();
  header["d"] = seq.dim();
  header["k"] = seq.eos_index;
  header["dtype"] = "f32le";
  std::string bytes = header.dump();
  bytes.push_back('\n');
  const std::size_t payload_start = bytes.size();
  for (double v : seq.rows.data()) io::append_f32_le(bytes, v);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + payload_start;
  const std::uint64_t checksum = io::fnv1a64({p, bytes.size() - payload_start});
  io::append_u64_le(bytes, checksum);
  return bytes;
}

inline EmbeddingSequence decode_sequence(const std::string& bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) throw Error(ErrorCode::kCorruptHeader, "no header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, newline));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptHeader, std::string("header is not JSON: ") + e.what());
  }
  std::size_t length = 0, dim = 0, eos = 0;
  try {
    if (header.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kCorruptHeader, "unsupported version");
    }
    if (header.at("dtype").get<std::string>() != "f32le") {
      throw Error(ErrorCode::kCorruptHeader, "unsupported dtype");
    }
    length = header.at("L").get<std::size_t>();
    dim = header.at("d").get<std::size_t>();
    eos = header.at("k").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptHeader, std::string("bad header field: ") + e.what());
  }
  if (length == 0 || dim == 0 || eos < 1 || eos > length) {
    throw Error(ErrorCode::kCorruptHeader, "header dims out of range");
  }
  const std::size_t payload_start = newline + 1;
  const std::size_t payload_bytes = length * dim * 4;
  if (bytes.size() != payload_start + payload_bytes + 8) {
    throw Error(ErrorCode::kCorruptHeader,
                "header declares " + std::to_string(payload_bytes) + " payload bytes but file has " +
                    std::to_string(bytes.size() - payload_start));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + payload_start;
  if (io::fnv1a64({p, payload_bytes}) != io::read_u64_le(p + payload_bytes)) {
    throw Error(ErrorCode::kChecksumMismatch, "payload checksum mismatch");
  }
  EmbeddingSequence seq{Matrix(length, dim), eos};
  auto data = seq.rows.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = io::read_f32_le(p + 4 * i);
  return seq;
}

inline void write_sequence(const EmbeddingSequence& seq, const std::filesystem::path& path) {
  io::write_file(path, encode_sequence(seq));
}

inline EmbeddingSequence read_sequence(const std::filesystem::path& path) {
  return decode_sequence(io::read_file(path));
}

}  // namespace sparcl
