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

// A toy compositional world. A scene is four discrete slots (subject, object,
// attribute, relation); images and captions are fixed random linear
// renderings of the scene's one-hot code plus gaussian noise. Sample groups
// pair a real scene with a one-slot edit (synthetic negative) and a
// re-rendering (synthetic positive), and can be corrupted on purpose to
// mimic imperfect generators.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sparcl/error.hpp"
#include "sparcl/numkit.hpp"
#include "sparcl/rng.hpp"

namespace sparcl {

struct WorldConfig {
  std::size_t num_objects = 16;
  std::size_t num_attributes = 8;
  std::size_t num_relations = 8;
  std::size_t image_dim = 64;
  std::size_t text_dim = 64;
  double image_noise = 0.03;
  double text_noise = 0.03;
  // Synthetic positive rendered from an edited scene ("hallucinated" caption).
  double p_bad_pos = 0.1;
  // Synthetic negative with two or more edits instead of one.
  double p_easy_neg = 0.1;
  // Column structure of the rendering maps. Subject-k and object-k columns
  // share an identity direction u_k and differ by role-specific directions of
  // norm role_scale; attribute and relation columns have norm detail_scale.
  // Small values make bag-of-objects features dominate the signal.
  double role_scale = 0.3;
  double detail_scale = 0.3;
  std::uint64_t seed = 0;

  std::size_t semantic_dim() const {
    return 2 * num_objects + num_attributes + num_relations;
  }

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
    if (num_objects < 2 || num_attributes < 2 || num_relations < 2) {
      fail("vocabulary sizes must be >= 2");
    }
    if (image_dim < semantic_dim() || text_dim < semantic_dim()) {
      fail("image_dim and text_dim must be >= semantic dim " + std::to_string(semantic_dim()));
    }
    if (!(image_noise >= 0.0) || !(text_noise >= 0.0)) fail("noise scales must be >= 0");
    if (!(p_bad_pos >= 0.0 && p_bad_pos <= 1.0)) fail("p_bad_pos must be in [0,1]");
    if (!(p_easy_neg >= 0.0 && p_easy_neg <= 1.0)) fail("p_easy_neg must be in [0,1]");
    if (!(role_scale > 0.0) || !(detail_scale > 0.0)) {
      fail("role_scale and detail_scale must be > 0");
    }
  }
};

enum class Slot { kSubject = 0, kObject = 1, kAttribute = 2, kRelation = 3 };
inline constexpr std::size_t kNumSlots = 4;

struct Scene {
  std::size_t subject = 0;
  std::size_t object = 1;
  std::size_t attribute = 0;
  std::size_t relation = 0;

  std::size_t& at(Slot s) {
    switch (s) {
      case Slot::kSubject: return subject;
      case Slot::kObject: return object;
      case Slot::kAttribute: return attribute;
      case Slot::kRelation: return relation;
    }
    return subject;
  }
  std::size_t at(Slot s) const { return const_cast<Scene&>(*this).at(s); }

  bool operator==(const Scene&) const = default;
};

inline std::size_t slot_distance(const Scene& a, const Scene& b) {
  return std::size_t{a.subject != b.subject} + std::size_t{a.object != b.object} +
         std::size_t{a.attribute != b.attribute} + std::size_t{a.relation != b.relation};
}

inline bool scene_valid(const Scene& s, const WorldConfig& cfg) {
  return s.subject < cfg.num_objects && s.object < cfg.num_objects &&
         s.subject != s.object && s.attribute < cfg.num_attributes &&
         s.relation < cfg.num_relations;
}

// Block layout: [subject | object | attribute | relation].
inline std::vector<double> onehot(const Scene& s, const WorldConfig& cfg) {
  std::vector<double> code(cfg.semantic_dim(), 0.0);
  code[s.subject] = 1.0;
  code[cfg.num_objects + s.object] = 1.0;
  code[2 * cfg.num_objects + s.attribute] = 1.0;
  code[2 * cfg.num_objects + cfg.num_attributes + s.relation] = 1.0;
  return code;
}

inline Scene sample_scene(CounterRng& rng, const WorldConfig& cfg) {
  Scene s;
  s.subject = rng.below(cfg.num_objects);
  // Uniform over the remaining objects.
  s.object = rng.below(cfg.num_objects - 1);
  if (s.object >= s.subject) ++s.object;
  s.attribute = rng.below(cfg.num_attributes);
  s.relation = rng.below(cfg.num_relations);
  return s;
}

namespace detail {

// A slot can change only if some value other than the current one (and, for
// subject/object, other than the partner slot) exists.
inline bool slot_editable(Slot slot, const WorldConfig& cfg) {
  switch (slot) {
    case Slot::kSubject:
    case Slot::kObject: return cfg.num_objects >= 3;
    case Slot::kAttribute: return cfg.num_attributes >= 2;
    case Slot::kRelation: return cfg.num_relations >= 2;
  }
  return false;
}

inline std::size_t draw_other(CounterRng& rng, std::size_t vocab, std::size_t avoid_a,
                              std::size_t avoid_b) {
  // avoid_b == avoid_a when only one value is excluded.
  const std::size_t lo = std::min(avoid_a, avoid_b);
  const std::size_t hi = std::max(avoid_a, avoid_b);
  const std::size_t excluded = lo == hi ? 1 : 2;
  std::size_t v = rng.below(vocab - excluded);
  if (v >= lo) ++v;
  if (excluded == 2 && v >= hi) ++v;
  return v;
}

}  // namespace detail

// Changes exactly n_edits distinct slots to different valid values.
inline Scene perturb(const Scene& scene, CounterRng& rng, std::size_t n_edits,
                     const WorldConfig& cfg) {
  if (n_edits == 0) throw Error(ErrorCode::kImpossibleEdit, "n_edits must be >= 1");
  std::array<Slot, kNumSlots> candidates{};
  std::size_t count = 0;
  for (Slot s : {Slot::kSubject, Slot::kObject, Slot::kAttribute, Slot::kRelation}) {
    if (detail::slot_editable(s, cfg)) candidates[count++] = s;
  }
  if (n_edits > count) {
    throw Error(ErrorCode::kImpossibleEdit, "requested " + std::to_string(n_edits) +
                                                " edits but only " + std::to_string(count) +
                                                " slots can change");
  }
  // Partial Fisher-Yates to pick the slots.
  for (std::size_t i = 0; i < n_edits; ++i) {
    const std::size_t j = i + rng.below(count - i);
    std::swap(candidates[i], candidates[j]);
  }
  Scene out = scene;
  for (std::size_t i = 0; i < n_edits; ++i) {
    switch (candidates[i]) {
      case Slot::kSubject:
        out.subject = detail::draw_other(rng, cfg.num_objects, scene.subject, out.object);
        break;
      case Slot::kObject:
        out.object = detail::draw_other(rng, cfg.num_objects, scene.object, out.subject);
        break;
      case Slot::kAttribute:
        out.attribute = detail::draw_other(rng, cfg.num_attributes, scene.attribute,
                                           scene.attribute);
        break;
      case Slot::kRelation:
        out.relation = detail::draw_other(rng, cfg.num_relations, scene.relation,
                                          scene.relation);
        break;
    }
  }
  return out;
}

// One real pair plus its synthetic negative and synthetic positive pairs.
// The diag_* flags record how the group was generated; training code must not
// read them.
struct SampleGroup {
  std::vector<double> img_r, img_sn, img_sp;
  std::vector<double> cap_r, cap_sn, cap_sp;
  bool diag_pos_corrupted = false;
  bool diag_neg_easy = false;
};

// Scenes behind a group, for diagnostics and tests.
struct GroupScenes {
  Scene real;
  Scene negative;
  Scene positive;
};

enum class EditKind { kAttribute = 0, kRelation = 1, kObjectSwap = 2 };
inline constexpr std::size_t kNumEditKinds = 3;

constexpr std::string_view edit_kind_name(EditKind k) {
  switch (k) {
    case EditKind::kAttribute: return "attribute";
    case EditKind::kRelation: return "relation";
    case EditKind::kObjectSwap: return "object_swap";
  }
  return "unknown";
}

struct EvalCase {
  std::vector<double> image;
  std::vector<double> caption_pos;
  std::vector<double> caption_neg;
  EditKind edit_kind = EditKind::kAttribute;
};

inline Scene apply_edit(const Scene& scene, EditKind kind, CounterRng& rng,
                        const WorldConfig& cfg) {
  Scene out = scene;
  switch (kind) {
    case EditKind::kAttribute:
      out.attribute =
          detail::draw_other(rng, cfg.num_attributes, scene.attribute, scene.attribute);
      break;
    case EditKind::kRelation:
      out.relation = detail::draw_other(rng, cfg.num_relations, scene.relation, scene.relation);
      break;
    case EditKind::kObjectSwap:
      std::swap(out.subject, out.object);
      break;
  }
  return out;
}

// Stream tags under the world seed.
inline constexpr std::uint64_t kStreamMaps = 1;
inline constexpr std::uint64_t kStreamGroups = 2;
inline constexpr std::uint64_t kStreamEval = 3;

class World {
 public:
  explicit World(WorldConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const CounterRng root(cfg_.seed);
    CounterRng maps = root.split(kStreamMaps);
    image_map_ = draw_full_rank_map(maps, cfg_.image_dim);
    text_map_ = draw_full_rank_map(maps, cfg_.text_dim);
  }

  const WorldConfig& config() const noexcept { return cfg_; }
  const Matrix& image_map() const noexcept { return image_map_; }
  const Matrix& text_map() const noexcept { return text_map_; }

  std::vector<double> render_clean_image(const Scene& s) const { return apply(image_map_, s); }
  std::vector<double> render_clean_caption(const Scene& s) const { return apply(text_map_, s); }

  std::vector<double> render_image(const Scene& s, CounterRng& rng) const {
    return add_noise(render_clean_image(s), cfg_.image_noise, rng);
  }
  std::vector<double> render_caption(const Scene& s, CounterRng& rng) const {
    return add_noise(render_clean_caption(s), cfg_.text_noise, rng);
  }

  SampleGroup make_group(CounterRng& rng, GroupScenes* scenes = nullptr) const {
    GroupScenes sc;
    sc.real = sample_scene(rng, cfg_);
    SampleGroup g;
    g.diag_neg_easy = rng.bernoulli(cfg_.p_easy_neg);
    std::size_t neg_edits = 1;
    if (g.diag_neg_easy) {
      const std::size_t max_edits = editable_slots();
      neg_edits = 2 + rng.below(max_edits - 1);
    }
    sc.negative = perturb(sc.real, rng, neg_edits, cfg_);
    g.diag_pos_corrupted = rng.bernoulli(cfg_.p_bad_pos);
    sc.positive = g.diag_pos_corrupted ? perturb(sc.real, rng, 1, cfg_) : sc.real;

    g.img_r = render_image(sc.real, rng);
    g.img_sn = render_image(sc.negative, rng);
    g.img_sp = render_image(sc.positive, rng);
    g.cap_r = render_caption(sc.real, rng);
    g.cap_sn = render_caption(sc.negative, rng);
    g.cap_sp = render_caption(sc.positive, rng);
    if (scenes != nullptr) *scenes = sc;
    return g;
  }

  // Group `index` of the dataset addressed by the world seed.
  SampleGroup make_group(std::uint64_t index, GroupScenes* scenes = nullptr) const {
    CounterRng rng = CounterRng(cfg_.seed).split(kStreamGroups).split(index);
    return make_group(rng, scenes);
  }

  // Round-robin over edit kinds when `kind` is empty.
  std::vector<EvalCase> make_eval_set(CounterRng& rng, std::size_t count,
                                      std::optional<EditKind> kind = std::nullopt) const {
    if (count == 0) throw Error(ErrorCode::kInvalidCount, "eval set count must be >= 1");
    std::vector<EvalCase> cases;
    cases.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const EditKind k = kind.value_or(static_cast<EditKind>(i % kNumEditKinds));
      const Scene base = sample_scene(rng, cfg_);
      const Scene edited = apply_edit(base, k, rng, cfg_);
      EvalCase c;
      c.edit_kind = k;
      c.image = render_image(base, rng);
      c.caption_pos = render_caption(base, rng);
      c.caption_neg = render_caption(edited, rng);
      cases.push_back(std::move(c));
    }
    return cases;
  }

  std::size_t editable_slots() const {
    std::size_t n = 0;
    for (Slot s : {Slot::kSubject, Slot::kObject, Slot::kAttribute, Slot::kRelation}) {
      n += detail::slot_editable(s, cfg_) ? 1 : 0;
    }
    return n;
  }

 private:
  std::vector<double> apply(const Matrix& map, const Scene& s) const {
    const std::vector<double> code = onehot(s, cfg_);
    std::vector<double> out(map.rows(), 0.0);
    for (std::size_t r = 0; r < map.rows(); ++r) out[r] = dot(map.row(r), code);
    return out;
  }

  static std::vector<double> add_noise(std::vector<double> v, double sigma, CounterRng& rng) {
    if (sigma == 0.0) return v;
    for (double& x : v) x += sigma * rng.normal();
    return v;
  }

  // Gaussian D×s map built from N(0, 1/D) directions, redrawn until its
  // columns are linearly independent so distinct scenes never render
  // identically.
  Matrix draw_full_rank_map(CounterRng& rng, std::size_t dim) const {
    const std::size_t s = cfg_.semantic_dim();
    const std::size_t objects = cfg_.num_objects;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    auto direction = [&] {
      std::vector<double> v(dim);
      for (double& x : v) x = scale * rng.normal();
      return v;
    };
    for (;;) {
      Matrix m(dim, s);
      for (std::size_t k = 0; k < objects; ++k) {
        const auto identity = direction();
        const auto as_subject = direction();
        const auto as_object = direction();
        for (std::size_t r = 0; r < dim; ++r) {
          m(r, k) = identity[r] + cfg_.role_scale * as_subject[r];
          m(r, objects + k) = identity[r] + cfg_.role_scale * as_object[r];
        }
      }
      for (std::size_t c = 2 * objects; c < s; ++c) {
        const auto col = direction();
        for (std::size_t r = 0; r < dim; ++r) m(r, c) = cfg_.detail_scale * col[r];
      }
      if (has_full_column_rank(m)) return m;
    }
  }

 public:
  // Modified Gram-Schmidt on the columns.
  static bool has_full_column_rank(const Matrix& m, double tol = 1e-8) {
    const Matrix cols = transpose(m);
    std::vector<std::vector<double>> basis;
    for (std::size_t c = 0; c < cols.rows(); ++c) {
      std::vector<double> v(cols.row(c).begin(), cols.row(c).end());
      const double original = norm(v);
      for (const auto& q : basis) {
        const double p = dot(v, q);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * q[i];
      }
      const double residual = norm(v);
      if (!(residual > tol * std::max(original, 1.0))) return false;
      for (double& x : v) x /= residual;
      basis.push_back(std::move(v));
    }
    return true;
  }

 private:
  WorldConfig cfg_;
  Matrix image_map_;
  Matrix text_map_;
};

}  // namespace sparcl
