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

// sparcl_kit: data generation, training, ablation sweeps and diagnostics.
//
// Exit codes: 0 ok, 1 config/argument error, 2 I/O or file-format error,
// 3 numeric divergence.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sparcl/dataset.hpp"
#include "sparcl/error.hpp"
#include "sparcl/geninject.hpp"
#include "sparcl/losses.hpp"
#include "sparcl/run_config.hpp"
#include "sparcl/trainer.hpp"

namespace fs = std::filesystem;
using sparcl::Error;
using sparcl::ErrorCode;
using sparcl::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitDivergence = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
    case ErrorCode::kCorruptHeader:
    case ErrorCode::kChecksumMismatch:
      return kExitIo;
    case ErrorCode::kDivergenceDetected:
    case ErrorCode::kZeroRow:
      return kExitDivergence;
    default:
      return kExitConfig;
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

sparcl::TrainConfig config_from(const std::string& path) {
  return path.empty() ? sparcl::TrainConfig{} : sparcl::load_run_config(path);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kIoError, "cannot create output directory " + dir.string());
  }
}

std::size_t thread_cap() {
  const char* env = std::getenv("SPARCL_KIT_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) {
    throw Error(ErrorCode::kInvalidConfig,
                std::string("SPARCL_KIT_THREADS must be a positive integer, got '") + env + "'");
  }
  return static_cast<std::size_t>(v);
}

// Fixed groups from --dataset; the dataset's world replaces the configured one
// so evaluation cases come from the same rendering maps.
std::vector<sparcl::SampleGroup> load_fixed_groups(const std::string& path,
                                                   sparcl::TrainConfig& cfg) {
  if (path.empty()) return {};
  sparcl::Dataset ds = sparcl::read_dataset(path);
  cfg.world = ds.world;
  cfg.validate();
  return std::move(ds.groups);
}

ordered_json report_json(const sparcl::EvalReport& r) {
  ordered_json j;
  for (std::size_t k = 0; k < sparcl::kNumEditKinds; ++k) {
    const auto kind = static_cast<sparcl::EditKind>(k);
    j[std::string(sparcl::edit_kind_name(kind))] = r.accuracy(kind);
  }
  j["overall"] = r.overall();
  return j;
}

ordered_json matrix_json(const sparcl::Matrix& m) {
  ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.data().begin(), m.data().end());
  return j;
}

// ---- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  std::string config;
  std::string out;
  std::size_t count = 100;
  std::optional<std::uint64_t> seed;
};

int run_gen_data(const GenDataArgs& a) {
  sparcl::TrainConfig cfg = config_from(a.config);
  if (a.seed) cfg.world.seed = *a.seed;
  cfg.world.validate();
  sparcl::DatasetDiagnostics diag;
  const sparcl::Dataset ds = sparcl::generate_dataset(cfg.world, a.count, &diag);
  sparcl::write_dataset(ds, diag, a.out);
  ordered_json summary;
  summary["out"] = a.out;
  summary["meta"] = sparcl::meta_path_for(a.out).string();
  summary["count"] = a.count;
  summary["image_dim"] = cfg.world.image_dim;
  summary["text_dim"] = cfg.world.text_dim;
  summary["world_seed"] = cfg.world.seed;
  summary["pos_corrupted"] = diag.pos_corrupted.size();
  summary["neg_easy"] = diag.neg_easy.size();
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string out;
  std::string dataset;
  std::optional<std::uint64_t> seed;
};

std::string metrics_csv(const sparcl::MetricsLog& log) {
  std::string csv = "step,lr,loss_con,loss_mar_img,loss_mar_txt,loss_total\n";
  for (const auto& r : log.steps) {
    csv += std::to_string(r.step) + "," + fmt17(r.lr) + "," + fmt17(r.loss_con) + "," +
           fmt17(r.loss_mar_img) + "," + fmt17(r.loss_mar_txt) + "," + fmt17(r.loss_total) +
           "\n";
  }
  return csv;
}

ordered_json loss_summary(const sparcl::MetricsLog& log) {
  ordered_json j;
  j["steps"] = log.steps.size();
  if (log.steps.empty()) return j;
  double max_img = 0.0, max_txt = 0.0;
  for (const auto& r : log.steps) {
    max_img = std::max(max_img, r.loss_mar_img);
    max_txt = std::max(max_txt, r.loss_mar_txt);
  }
  j["first_loss_total"] = log.steps.front().loss_total;
  j["final_loss_total"] = log.steps.back().loss_total;
  j["final_loss_con"] = log.steps.back().loss_con;
  j["final_loss_mar_img"] = log.steps.back().loss_mar_img;
  j["final_loss_mar_txt"] = log.steps.back().loss_mar_txt;
  j["max_loss_mar_img"] = max_img;
  j["max_loss_mar_txt"] = max_txt;
  return j;
}

int run_train(const TrainArgs& a) {
  sparcl::TrainConfig cfg = config_from(a.config);
  if (a.seed) cfg.seed = *a.seed;
  const std::vector<sparcl::SampleGroup> fixed = load_fixed_groups(a.dataset, cfg);
  const fs::path dir(a.out);
  ensure_dir(dir);

  const auto start = std::chrono::steady_clock::now();
  const sparcl::TrainResult result = sparcl::train(cfg, fixed);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ordered_json results;
  results["seed"] = cfg.seed;
  results["accuracy"] = report_json(*result.log.final_eval);
  results["eval_cases"] = result.log.final_eval->overall_total();
  results["loss_summary"] = loss_summary(result.log);
  results["dataset"] = a.dataset.empty() ? ordered_json(nullptr) : ordered_json(a.dataset);
  results["config"] = sparcl::to_json(cfg);

  ordered_json params;
  params["image_proj"] = matrix_json(result.params.image_proj);
  params["text_proj"] = matrix_json(result.params.text_proj);

  sparcl::io::write_file(dir / "metrics.csv", metrics_csv(result.log));
  sparcl::io::write_file(dir / "results.json", results.dump(2) + "\n");
  sparcl::io::write_file(dir / "params.json", params.dump() + "\n");

  ordered_json summary;
  summary["out"] = dir.string();
  summary["accuracy"] = results["accuracy"];
  summary["wall_seconds"] = wall;
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

// ---- ablate -----------------------------------------------------------------

struct AblateArgs {
  std::string config;
  std::string out;
  std::string dataset;
  std::string modes = "fixed,adaptive";
  std::string seeds = "0";
};

std::string ablation_csv(const sparcl::AblationTable& t) {
  std::string csv =
      "row,mode,seed,runs,acc_attribute,acc_relation,acc_object_swap,acc_overall,"
      "acc_stddev,error\n";
  for (const auto& c : t.cells) {
    csv += "cell," + std::string(sparcl::margin_mode_name(c.mode)) + "," +
           std::to_string(c.seed) + ",";
    if (c.report) {
      csv += "1," + fmt17(c.report->accuracy(sparcl::EditKind::kAttribute)) + "," +
             fmt17(c.report->accuracy(sparcl::EditKind::kRelation)) + "," +
             fmt17(c.report->accuracy(sparcl::EditKind::kObjectSwap)) + "," +
             fmt17(c.report->overall()) + ",,\n";
    } else {
      std::string msg = c.error;
      for (char& ch : msg) {
        if (ch == ',' || ch == '\n') ch = ';';
      }
      csv += "0,,,,,," + msg + "\n";
    }
  }
  for (const auto& s : t.summaries) {
    csv += "summary," + std::string(sparcl::margin_mode_name(s.mode)) + ",," +
           std::to_string(s.runs) + ",,,,";
    if (s.runs > 0) csv += fmt17(s.mean) + "," + fmt17(s.stddev);
    else csv += ",";
    csv += ",\n";
  }
  return csv;
}

int run_ablate(const AblateArgs& a) {
  std::vector<sparcl::MarginMode> modes;
  for (const auto& m : split_list(a.modes)) {
    const auto parsed = sparcl::parse_margin_mode(m);
    if (!parsed) throw Error(ErrorCode::kInvalidConfig, "unknown margin mode '" + m + "'");
    modes.push_back(*parsed);
  }
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(a.seeds)) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.front() == '-') {
      throw Error(ErrorCode::kInvalidConfig, "bad seed '" + s + "'");
    }
    seeds.push_back(v);
  }
  sparcl::TrainConfig cfg = config_from(a.config);
  const std::vector<sparcl::SampleGroup> fixed = load_fixed_groups(a.dataset, cfg);
  const std::size_t threads = thread_cap();
  const fs::path dir(a.out);
  ensure_dir(dir);

  const sparcl::AblationTable table = sparcl::ablate(cfg, modes, seeds, threads, fixed);
  sparcl::io::write_file(dir / "ablation.csv", ablation_csv(table));

  int status = kExitOk;
  for (const auto& c : table.cells) {
    if (c.failure) {
      std::cerr << "cell " << sparcl::margin_mode_name(c.mode) << "/" << c.seed
                << " failed: " << c.error << "\n";
      if (status == kExitOk) status = exit_code_for(*c.failure);
    }
  }
  ordered_json summary = ordered_json::array();
  for (const auto& s : table.summaries) {
    summary.push_back({{"mode", std::string(sparcl::margin_mode_name(s.mode))},
                       {"runs", s.runs},
                       {"mean", s.mean},
                       {"stddev", s.stddev}});
  }
  std::cout << summary.dump() << "\n";
  return status;
}

// ---- margin-plot ------------------------------------------------------------

struct MarginPlotArgs {
  double base_margin = sparcl::LossConfig{}.base_margin;
  double cutoff = sparcl::LossConfig{}.cutoff;
  double margin_scale = sparcl::LossConfig{}.margin_scale;
  std::string out;
};

constexpr double kPlotSpacing = 1e-4;

// Samples d on the integer lattice i·1e-4 covering [beta − 2·m0, 3·m0], so
// d = 0 and lattice-aligned beta/m0 are hit exactly.
int run_margin_plot(const MarginPlotArgs& a) {
  if (!(a.cutoff < 0.0 && 0.0 < a.base_margin) || !(a.margin_scale >= 0.0) ||
      !std::isfinite(a.cutoff) || !std::isfinite(a.base_margin) ||
      !std::isfinite(a.margin_scale)) {
    throw Error(ErrorCode::kInvalidParams, "margin-plot needs beta < 0 < m0 and gamma >= 0");
  }
  sparcl::LossConfig cfg;
  cfg.base_margin = a.base_margin;
  cfg.cutoff = a.cutoff;
  cfg.margin_scale = a.margin_scale;
  const double lo = a.cutoff - 2.0 * a.base_margin;
  const double hi = 3.0 * a.base_margin;
  const auto first = static_cast<long long>(std::ceil(lo / kPlotSpacing - 1e-9));
  const auto last = static_cast<long long>(std::floor(hi / kPlotSpacing + 1e-9));
  std::string csv = "d,m_adaptive,hinge_value\n";
  for (long long i = first; i <= last; ++i) {
    const double d = static_cast<double>(i) * kPlotSpacing;
    const double m = sparcl::adaptive_margin(d, cfg);
    const double hinge = std::max(0.0, m - d);
    csv += fmt17(d) + "," + fmt17(m) + "," + fmt17(hinge) + "\n";
  }
  sparcl::io::write_file(a.out, csv);
  std::cout << ordered_json{{"out", a.out}, {"rows", last - first + 1}}.dump() << "\n";
  return kExitOk;
}

// ---- inject-demo ------------------------------------------------------------

struct InjectArgs {
  std::string sequence;
  std::string image;
  std::string out;
};

int run_inject_demo(const InjectArgs& a) {
  const sparcl::EmbeddingSequence seq = sparcl::read_sequence(a.sequence);
  const sparcl::EmbeddingSequence image_file = sparcl::read_sequence(a.image);
  if (image_file.length() != 1) {
    throw Error(ErrorCode::kDimMismatch, "image embedding file must hold exactly one row, has " +
                                             std::to_string(image_file.length()));
  }
  const auto row = image_file.rows.row(0);
  const sparcl::ImageEmbedding image{{row.begin(), row.end()}};
  const sparcl::EmbeddingSequence out = sparcl::inject_image_features(seq, image);
  sparcl::write_sequence(out, a.out);
  ordered_json summary;
  summary["k"] = seq.eos_index;
  summary["L"] = seq.length();
  summary["replaced"] = seq.length() - seq.eos_index;
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparcl_kit: toy compositional contrastive training kit"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a toy dataset file");
  gen_cmd->add_option("--config", gen.config, "Run config JSON");
  gen_cmd->add_option("--out", gen.out, "Dataset output path")->required();
  gen_cmd->add_option("--count", gen.count, "Number of groups")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Overrides world.seed");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train and evaluate one run");
  train_cmd->add_option("--config", tr.config, "Run config JSON");
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--seed", tr.seed, "Overrides train.seed");
  train_cmd->add_option("--dataset", tr.dataset, "Cycle through a fixed dataset file");

  AblateArgs ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "Margin-mode sweep over seeds");
  ablate_cmd->add_option("--config", ab.config, "Run config JSON");
  ablate_cmd->add_option("--out", ab.out, "Output directory")->required();
  ablate_cmd->add_option("--modes", ab.modes, "Comma-separated margin modes")
      ->capture_default_str();
  ablate_cmd->add_option("--seeds", ab.seeds, "Comma-separated training seeds")
      ->capture_default_str();
  ablate_cmd->add_option("--dataset", ab.dataset, "Cycle through a fixed dataset file");

  MarginPlotArgs mp;
  auto* plot_cmd = app.add_subcommand("margin-plot", "Export the adaptive margin curve");
  plot_cmd->add_option("--m0", mp.base_margin, "Base margin")->capture_default_str();
  plot_cmd->add_option("--beta", mp.cutoff, "Cutoff")->capture_default_str();
  plot_cmd->add_option("--gamma", mp.margin_scale, "Scale")->capture_default_str();
  plot_cmd->add_option("--out", mp.out, "CSV output path")->required();

  InjectArgs inj;
  auto* inject_cmd = app.add_subcommand("inject-demo", "Overwrite prompt padding rows");
  inject_cmd->add_option("--sequence", inj.sequence, "Embedding sequence file")->required();
  inject_cmd->add_option("--image", inj.image, "Image embedding file (one row)")->required();
  inject_cmd->add_option("--out", inj.out, "Output sequence file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen_cmd) return run_gen_data(gen);
    if (*train_cmd) return run_train(tr);
    if (*ablate_cmd) return run_ablate(ab);
    if (*plot_cmd) return run_margin_plot(mp);
    if (*inject_cmd) return run_inject_demo(inj);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
