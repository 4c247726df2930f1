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

// Toy dataset files.
//
//   line 1   {"format":"sparcl-toyworld","version":1,"count":N,
//             "image_dim":DI,"text_dim":DT,"config":{...world config...}}\n
//   payload  N groups in index order; per group img_r, img_sn, img_sp
//            (DI floats each) then cap_r, cap_sn, cap_sp (DT floats each),
//            little-endian float32.
//
// Generation diagnostics are never stored in the payload; they go to the
// companion <path>.meta.json.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparcl/binary_io.hpp"
#include "sparcl/error.hpp"
#include "sparcl/run_config.hpp"
#include "sparcl/toyworld.hpp"

namespace sparcl {

inline constexpr std::string_view kDatasetFormat = "sparcl-toyworld";

struct Dataset {
  WorldConfig world;
  std::vector<SampleGroup> groups;
};

struct DatasetDiagnostics {
  std::size_t count = 0;
  std::vector<std::size_t> pos_corrupted;
  std::vector<std::size_t> neg_easy;

  ordered_json to_json() const {
    ordered_json j;
    j["count"] = count;
    j["pos_corrupted_count"] = pos_corrupted.size();
    j["neg_easy_count"] = neg_easy.size();
    j["pos_corrupted_indices"] = pos_corrupted;
    j["neg_easy_indices"] = neg_easy;
    return j;
  }
};

// Groups 0..count-1 of the world's indexed stream.
inline Dataset generate_dataset(const WorldConfig& cfg, std::size_t count,
                                DatasetDiagnostics* diagnostics = nullptr) {
  if (count == 0) throw Error(ErrorCode::kInvalidCount, "dataset count must be >= 1");
  const World world(cfg);
  Dataset ds{cfg, {}};
  ds.groups.reserve(count);
  DatasetDiagnostics diag;
  diag.count = count;
  for (std::size_t i = 0; i < count; ++i) {
    ds.groups.push_back(world.make_group(static_cast<std::uint64_t>(i)));
    if (ds.groups.back().diag_pos_corrupted) diag.pos_corrupted.push_back(i);
    if (ds.groups.back().diag_neg_easy) diag.neg_easy.push_back(i);
  }
  if (diagnostics != nullptr) *diagnostics = std::move(diag);
  return ds;
}

inline std::string encode_dataset(const Dataset& ds) {
  ordered_json header;
  header["format"] = std::string(kDatasetFormat);
  header["version"] = 1;
  header["count"] = ds.groups.size();
  header["image_dim"] = ds.world.image_dim;
  header["text_dim"] = ds.world.text_dim;
  header["config"] = to_json(ds.world);
  std::string bytes = header.dump();
  bytes.push_back('\n');
  auto put = [&](const std::vector<double>& v, std::size_t dim) {
    if (v.size() != dim) throw Error(ErrorCode::kDimMismatch, "group vector has wrong dim");
    for (double x : v) io::append_f32_le(bytes, x);
  };
  for (const SampleGroup& g : ds.groups) {
    put(g.img_r, ds.world.image_dim);
    put(g.img_sn, ds.world.image_dim);
    put(g.img_sp, ds.world.image_dim);
    put(g.cap_r, ds.world.text_dim);
    put(g.cap_sn, ds.world.text_dim);
    put(g.cap_sp, ds.world.text_dim);
  }
  return bytes;
}

inline Dataset decode_dataset(const std::string& bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) throw Error(ErrorCode::kCorruptHeader, "no header line");
  Dataset ds;
  std::size_t count = 0, di = 0, dt = 0;
  try {
    const auto header = nlohmann::json::parse(bytes.substr(0, newline));
    if (header.at("format").get<std::string>() != kDatasetFormat ||
        header.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kCorruptHeader, "not a version-1 toy dataset");
    }
    count = header.at("count").get<std::size_t>();
    di = header.at("image_dim").get<std::size_t>();
    dt = header.at("text_dim").get<std::size_t>();
    apply_world_section(header.at("config"), ds.world);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptHeader, std::string("bad dataset header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptHeader) throw;
    throw Error(ErrorCode::kCorruptHeader, std::string("bad dataset header: ") + e.what());
  }
  if (di != ds.world.image_dim || dt != ds.world.text_dim) {
    throw Error(ErrorCode::kCorruptHeader, "header dims disagree with config echo");
  }
  const std::size_t per_group = 3 * (di + dt) * 4;
  if (bytes.size() - (newline + 1) != count * per_group) {
    throw Error(ErrorCode::kCorruptHeader, "payload size does not match declared count");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + newline + 1;
  auto take = [&](std::size_t dim) {
    std::vector<double> v(dim);
    for (double& x : v) {
      x = io::read_f32_le(p);
      p += 4;
    }
    return v;
  };
  ds.groups.resize(count);
  for (SampleGroup& g : ds.groups) {
    g.img_r = take(di);
    g.img_sn = take(di);
    g.img_sp = take(di);
    g.cap_r = take(dt);
    g.cap_sn = take(dt);
    g.cap_sp = take(dt);
  }
  return ds;
}

inline std::filesystem::path meta_path_for(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta.json");
}

inline void write_dataset(const Dataset& ds, const DatasetDiagnostics& diag,
                          const std::filesystem::path& path) {
  io::write_file(path, encode_dataset(ds));
  io::write_file(meta_path_for(path), diag.to_json().dump(2) + "\n");
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  return decode_dataset(io::read_file(path));
}

}  // namespace sparcl
