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

// Toy dual-encoder training. Each encoder is a single linear projection
// followed by row normalization; similarities are cosines between the two
// embeddings. Training draws fresh groups every step (or cycles a fixed
// group list), evaluates the batch loss, backpropagates through the
// normalization, and applies AdamW under a cosine learning-rate schedule.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sparcl/batching.hpp"
#include "sparcl/error.hpp"
#include "sparcl/losses.hpp"
#include "sparcl/numkit.hpp"
#include "sparcl/rng.hpp"
#include "sparcl/toyworld.hpp"

namespace sparcl {

// kRealOnly trains on the real pairs of each group with the plain paired
// contrastive loss; synthetic rows are dropped.
enum class DataMode { kFull, kRealOnly };

constexpr std::string_view data_mode_name(DataMode m) {
  return m == DataMode::kFull ? "full" : "real_only";
}

inline std::optional<DataMode> parse_data_mode(std::string_view s) {
  if (s == "full") return DataMode::kFull;
  if (s == "real_only") return DataMode::kRealOnly;
  return std::nullopt;
}

struct TrainConfig {
  std::size_t groups_per_batch = 32;
  std::size_t total_steps = 2000;
  double base_lr = 0.01;  // for a reference batch of 256 rows
  double weight_decay = 0.5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::size_t embed_dim = 16;
  std::size_t eval_cases = 900;
  DataMode data_mode = DataMode::kFull;
  LossConfig loss;
  WorldConfig world;

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
    if (groups_per_batch == 0) fail("groups_per_batch must be >= 1");
    if (!(base_lr > 0.0)) fail("base_lr must be > 0");
    if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must be in [0,1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must be in [0,1)");
    if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
    if (embed_dim < 2) fail("embed_dim must be >= 2");
    if (eval_cases == 0) fail("eval_cases must be >= 1");
    loss.validate();
    if (loss.margin_mode == MarginMode::kNone && loss.margin_weight > 0.0) {
      fail("margin_mode none requires margin_weight = 0");
    }
    if (data_mode == DataMode::kRealOnly && loss.margin_weight > 0.0) {
      fail("real_only data mode has no synthetic sets; margin_weight must be 0");
    }
    world.validate();
  }
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, double value)
      : Error(ErrorCode::kDivergenceDetected,
              "non-finite loss " + std::to_string(value) + " at step " + std::to_string(step)),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

struct EncoderParams {
  Matrix image_proj;  // D_I × d_emb
  Matrix text_proj;   // D_T × d_emb
};

inline constexpr std::uint64_t kStreamInit = 10;
inline constexpr std::uint64_t kStreamTrainGroups = 11;

// Entries N(0, 1/D) from the training seed.
inline EncoderParams init_params(const TrainConfig& cfg) {
  CounterRng rng = CounterRng(cfg.seed).split(kStreamInit);
  auto draw = [&](std::size_t in_dim) {
    Matrix w(in_dim, cfg.embed_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& v : w.data()) v = scale * rng.normal();
    return w;
  };
  EncoderParams p;
  p.image_proj = draw(cfg.world.image_dim);
  p.text_proj = draw(cfg.world.text_dim);
  return p;
}

enum class Modality { kImage, kText };

// Unit-normalized projections plus the pre-normalization norms needed by the
// backward pass.
struct Encoded {
  Matrix unit;
  std::vector<double> norms;
};

inline Encoded encode_with_norms(const Matrix& proj, const Matrix& x) {
  if (x.cols() != proj.rows()) {
    throw Error(ErrorCode::kDimMismatch, "input dim " + std::to_string(x.cols()) +
                                             " vs projection rows " +
                                             std::to_string(proj.rows()));
  }
  Encoded e{matmul(x, proj), std::vector<double>(x.rows())};
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double n = norm(e.unit.row(r));
    if (!(n >= kMinRowNorm)) {
      throw Error(ErrorCode::kZeroRow, "embedding row " + std::to_string(r) + " vanished");
    }
    e.norms[r] = n;
    for (double& v : e.unit.row(r)) v /= n;
  }
  return e;
}

inline Matrix encode(const EncoderParams& params, const Matrix& x, Modality which) {
  return encode_with_norms(which == Modality::kImage ? params.image_proj : params.text_proj, x)
      .unit;
}

// dL/dW given dL/d(unit rows). For u = z/|z| the Jacobian is (I - u uᵀ)/|z|.
inline Matrix encode_backward(const Matrix& x, const Encoded& enc, const Matrix& d_unit) {
  Matrix d_raw(d_unit.rows(), d_unit.cols());
  for (std::size_t r = 0; r < d_unit.rows(); ++r) {
    const auto u = enc.unit.row(r);
    const auto g = d_unit.row(r);
    const double proj = dot(u, g);
    auto out = d_raw.row(r);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = (g[c] - proj * u[c]) / enc.norms[r];
  }
  return transposed_matmul(x, d_raw);
}

struct EncoderGrads {
  Matrix image_proj;
  Matrix text_proj;
};

struct BatchEvaluation {
  TotalLoss loss;
  EncoderGrads grads;
  Matrix similarity;
};

// Full forward/backward for one batch. `n` is the group count used by the
// margin sets; `labels` must match the row count of images and captions.
inline BatchEvaluation evaluate_batch(const EncoderParams& params, const Matrix& images,
                                      const Matrix& captions, const AlignmentMatrix& labels,
                                      std::size_t n, const LossConfig& loss_cfg) {
  const Encoded ei = encode_with_norms(params.image_proj, images);
  const Encoded et = encode_with_norms(params.text_proj, captions);
  BatchEvaluation out;
  out.similarity = matmul_transposed(ei.unit, et.unit);
  out.loss = total_loss(out.similarity, labels, n, loss_cfg);
  const Matrix d_img = matmul(out.loss.grad, et.unit);
  const Matrix d_txt = transposed_matmul(out.loss.grad, ei.unit);
  out.grads.image_proj = encode_backward(images, ei, d_img);
  out.grads.text_proj = encode_backward(captions, et, d_txt);
  return out;
}

// Linear scaling to the actual rows per batch (3n images + 3n captions),
// then cosine decay to zero with no warmup.
inline double effective_lr(const TrainConfig& cfg) {
  return cfg.base_lr * static_cast<double>(3 * cfg.groups_per_batch * 2) / 256.0;
}

inline double cosine_lr(std::size_t step, const TrainConfig& cfg) {
  if (cfg.total_steps == 0) return effective_lr(cfg);
  const double t = static_cast<double>(step) / static_cast<double>(cfg.total_steps);
  return 0.5 * effective_lr(cfg) * (1.0 + std::cos(std::numbers::pi * t));
}

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamMoments {
  Matrix first;
  Matrix second;
};

// One decoupled-weight-decay Adam update. `step` is 1-based.
inline void adamw_update(Matrix& param, const Matrix& grad, AdamMoments& moments,
                         std::size_t step, double lr, const AdamHyper& h) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient shape does not match parameter");
  }
  if (moments.first.size() != param.size()) moments.first = Matrix(param.rows(), param.cols());
  if (moments.second.size() != param.size()) moments.second = Matrix(param.rows(), param.cols());
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(step));
  auto w = param.data();
  const auto g = grad.data();
  auto m = moments.first.data();
  auto v = moments.second.data();
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] -= lr * h.weight_decay * w[k];
    m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g[k];
    v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g[k] * g[k];
    const double m_hat = m[k] / c1;
    const double v_hat = v[k] / c2;
    w[k] -= lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
}

struct AdamState {
  AdamMoments image;
  AdamMoments text;
  std::size_t step = 0;
};

inline void adamw_step(EncoderParams& params, const EncoderGrads& grads, AdamState& state,
                       double lr, const TrainConfig& cfg) {
  const AdamHyper h{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.weight_decay};
  ++state.step;
  adamw_update(params.image_proj, grads.image_proj, state.image, state.step, lr, h);
  adamw_update(params.text_proj, grads.text_proj, state.text, state.step, lr, h);
}

struct StepRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double loss_con = 0.0;
  double loss_mar_img = 0.0;
  double loss_mar_txt = 0.0;
  double loss_total = 0.0;

  bool operator==(const StepRecord&) const = default;
};

struct EvalReport {
  std::array<std::size_t, kNumEditKinds> correct{};
  std::array<std::size_t, kNumEditKinds> total{};

  std::size_t overall_correct() const { return correct[0] + correct[1] + correct[2]; }
  std::size_t overall_total() const { return total[0] + total[1] + total[2]; }

  double accuracy(EditKind k) const {
    const auto i = static_cast<std::size_t>(k);
    return total[i] == 0 ? 0.0 : static_cast<double>(correct[i]) / static_cast<double>(total[i]);
  }
  double overall() const {
    return overall_total() == 0
               ? 0.0
               : static_cast<double>(overall_correct()) / static_cast<double>(overall_total());
  }

  bool operator==(const EvalReport&) const = default;
};

struct MetricsLog {
  std::vector<StepRecord> steps;
  std::optional<EvalReport> final_eval;
};

// A case is correct iff S(image, positive) > S(image, negative); ties fail.
inline EvalReport evaluate(const EncoderParams& params, std::span<const EvalCase> cases) {
  if (cases.empty()) throw Error(ErrorCode::kEmptyEvalSet, "no evaluation cases");
  const std::size_t di = cases.front().image.size();
  const std::size_t dt = cases.front().caption_pos.size();
  Matrix images(cases.size(), di), pos(cases.size(), dt), neg(cases.size(), dt);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const EvalCase& c = cases[i];
    if (c.image.size() != di || c.caption_pos.size() != dt || c.caption_neg.size() != dt) {
      throw Error(ErrorCode::kDimMismatch, "eval case " + std::to_string(i) + " has odd dims");
    }
    std::copy(c.image.begin(), c.image.end(), images.row(i).begin());
    std::copy(c.caption_pos.begin(), c.caption_pos.end(), pos.row(i).begin());
    std::copy(c.caption_neg.begin(), c.caption_neg.end(), neg.row(i).begin());
  }
  const Matrix ui = encode(params, images, Modality::kImage);
  const Matrix up = encode(params, pos, Modality::kText);
  const Matrix un = encode(params, neg, Modality::kText);
  EvalReport report;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto k = static_cast<std::size_t>(cases[i].edit_kind);
    ++report.total[k];
    if (dot(ui.row(i), up.row(i)) > dot(ui.row(i), un.row(i))) ++report.correct[k];
  }
  return report;
}

inline std::vector<EvalCase> default_eval_set(const World& world, std::size_t count) {
  CounterRng rng = CounterRng(world.config().seed).split(kStreamEval);
  return world.make_eval_set(rng, count);
}

struct TrainResult {
  EncoderParams params;
  MetricsLog log;
};

// Draws fresh groups each step unless `fixed_groups` is non-empty, in which
// case batches cycle through it in order. Single-threaded and deterministic.
inline TrainResult train(const TrainConfig& cfg, std::span<const SampleGroup> fixed_groups = {}) {
  cfg.validate();
  const World world(cfg.world);
  TrainResult result{init_params(cfg), {}};
  AdamState adam;
  const std::size_t n = cfg.groups_per_batch;
  const CounterRng stream = CounterRng(cfg.world.seed).split(kStreamTrainGroups).split(cfg.seed);
  const AlignmentMatrix labels =
      cfg.data_mode == DataMode::kFull ? alignment_matrix(n) : AlignmentMatrix::paired(n);

  std::vector<SampleGroup> groups(n);
  result.log.steps.reserve(cfg.total_steps);
  for (std::size_t step = 0; step < cfg.total_steps; ++step) {
    for (std::size_t g = 0; g < n; ++g) {
      const std::uint64_t index = static_cast<std::uint64_t>(step) * n + g;
      if (fixed_groups.empty()) {
        CounterRng rng = stream.split(index);
        groups[g] = world.make_group(rng);
      } else {
        groups[g] = fixed_groups[index % fixed_groups.size()];
      }
    }
    Batch batch = build_batch(groups);
    if (cfg.data_mode == DataMode::kRealOnly) {
      Matrix img(n, batch.images.cols()), cap(n, batch.captions.cols());
      for (std::size_t g = 0; g < n; ++g) {
        std::copy(batch.images.row(g).begin(), batch.images.row(g).end(), img.row(g).begin());
        std::copy(batch.captions.row(g).begin(), batch.captions.row(g).end(),
                  cap.row(g).begin());
      }
      batch.images = std::move(img);
      batch.captions = std::move(cap);
    }
    const BatchEvaluation ev =
        evaluate_batch(result.params, batch.images, batch.captions, labels, n, cfg.loss);
    if (!std::isfinite(ev.loss.value)) throw DivergenceError(step, ev.loss.value);

    const double lr = cosine_lr(step, cfg);
    result.log.steps.push_back({step, lr, ev.loss.parts.contrastive, ev.loss.parts.margin_image,
                                ev.loss.parts.margin_text, ev.loss.value});
    adamw_step(result.params, ev.grads, adam, lr, cfg);
  }
  const std::vector<EvalCase> cases = default_eval_set(world, cfg.eval_cases);
  result.log.final_eval = evaluate(result.params, cases);
  return result;
}

struct AblationCell {
  MarginMode mode = MarginMode::kFixed;
  std::uint64_t seed = 0;
  std::optional<EvalReport> report;
  std::optional<ErrorCode> failure;
  std::string error;
};

struct AblationSummary {
  MarginMode mode = MarginMode::kFixed;
  std::size_t runs = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single run
};

struct AblationTable {
  std::vector<AblationCell> cells;  // mode-major, seeds in the given order
  std::vector<AblationSummary> summaries;
};

// Runs train+evaluate for every (mode, seed) with the world left untouched,
// so all cells see the same data streams for a given seed. Cells may run on
// up to `threads` threads; each cell is deterministic on its own and results
// are stored by index.
inline AblationTable ablate(const TrainConfig& base, std::span<const MarginMode> modes,
                            std::span<const std::uint64_t> seeds, std::size_t threads = 1,
                            std::span<const SampleGroup> fixed_groups = {}) {
  if (modes.empty() || seeds.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "ablation needs at least one mode and one seed");
  }
  AblationTable table;
  for (MarginMode m : modes) {
    for (std::uint64_t s : seeds) table.cells.push_back({m, s, std::nullopt, std::nullopt, {}});
  }
  auto run_cell = [&](AblationCell& cell) {
    TrainConfig cfg = base;
    cfg.loss.margin_mode = cell.mode;
    cfg.seed = cell.seed;
    try {
      cell.report = train(cfg, fixed_groups).log.final_eval;
    } catch (const Error& e) {
      cell.failure = e.code();
      cell.error = e.what();
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, table.cells.size()));
  if (threads == 1) {
    for (auto& cell : table.cells) run_cell(cell);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t i = t; i < table.cells.size(); i += threads) run_cell(table.cells[i]);
      });
    }
    for (auto& w : workers) w.join();
  }
  for (MarginMode m : modes) {
    AblationSummary s{m, 0, 0.0, 0.0};
    std::vector<double> accs;
    for (const auto& cell : table.cells) {
      if (cell.mode == m && cell.report) accs.push_back(cell.report->overall());
    }
    s.runs = accs.size();
    if (!accs.empty()) {
      double sum = 0.0;
      for (double a : accs) sum += a;
      s.mean = sum / static_cast<double>(accs.size());
      if (accs.size() > 1) {
        double sq = 0.0;
        for (double a : accs) sq += (a - s.mean) * (a - s.mean);
        s.stddev = std::sqrt(sq / static_cast<double>(accs.size() - 1));
      }
    }
    table.summaries.push_back(s);
  }
  return table;
}

}  // namespace sparcl
