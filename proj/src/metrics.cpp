// Copyright 2026 The SaliencyBench Authors.
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

#include "saliencybench/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "saliencybench/error.hpp"
#include "saliencybench/image_ops.hpp"
#include "saliencybench/rng.hpp"

namespace sbench {
namespace {

void require_plane_match(const Tensor& saliency, const GroundTruthMask& gt) {
  if (saliency.rank() != 2 || saliency.dim(0) != gt.height() ||
      saliency.dim(1) != gt.width()) {
    throw Error(ErrorCode::kShapeMismatch,
                "saliency " + shape_to_string(saliency.shape()) +
                    " does not match mask " +
                    shape_to_string(gt.mask().shape()));
  }
}

double masked_sum(const Tensor& plane, const GroundTruthMask& gt) {
  double s = 0.0;
  for (std::size_t i = 0; i < plane.size(); ++i) {
    if (gt.contains(i)) s += plane[i];
  }
  return s;
}

double total(const Tensor& plane) {
  double s = 0.0;
  for (float v : plane.values()) s += v;
  return s;
}

std::uint64_t hash_tensor(const Tensor& t) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (float v : t.values()) {
    h ^= std::bit_cast<std::uint32_t>(v);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

GroundTruthMask::GroundTruthMask(Tensor mask, MaskKind kind)
    : mask_(std::move(mask)), kind_(kind) {
  if (mask_.rank() != 2) {
    throw Error(ErrorCode::kShapeMismatch, "mask must be [h,w]");
  }
  for (float v : mask_.values()) {
    if (v == 1.0f) {
      ++area_;
    } else if (v != 0.0f) {
      throw Error(ErrorCode::kInvalidArgument, "mask values must be 0 or 1");
    }
  }
  if (area_ == 0) throw Error(ErrorCode::kEmptyMask, "mask has no set pixel");
}

std::vector<std::size_t> insertion_order(const Tensor& saliency) {
  std::vector<std::size_t> order(saliency.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return saliency[a] > saliency[b];
  });
  return order;
}

InsertionCurve insertion_auc(const Model& model, const Tensor& image,
                             std::size_t class_index, const Tensor& saliency,
                             const Tensor& reference, std::size_t steps) {
  if (image.rank() != 3 || reference.shape() != image.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "reference must match the image shape");
  }
  const std::size_t ch = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (saliency.shape() != Shape{h, w}) {
    throw Error(ErrorCode::kShapeMismatch, "saliency must be [h,w] of the image");
  }
  if (class_index >= model.num_classes()) {
    throw Error(ErrorCode::kClassOutOfRange, "class out of range");
  }
  const std::size_t n = h * w;
  if (steps < 1 || steps > n) {
    throw Error(ErrorCode::kInvalidArgument, "steps must be in [1, h*w]");
  }
  const std::vector<std::size_t> order = insertion_order(saliency);
  const double base = model.predict(reference)[class_index];

  InsertionCurve curve;
  curve.fractions.reserve(steps + 1);
  curve.scores.reserve(steps + 1);
  Tensor state = reference;
  std::size_t inserted = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const std::size_t boundary = k * n / steps;
    for (; inserted < boundary; ++inserted) {
      const std::size_t p = order[inserted];
      for (std::size_t c = 0; c < ch; ++c) state[c * n + p] = image[c * n + p];
    }
    const double score =
        k == 0 ? 0.0 : static_cast<double>(model.predict(state)[class_index]) - base;
    curve.fractions.push_back(static_cast<double>(boundary) / static_cast<double>(n));
    curve.scores.push_back(score);
    sum += score;
  }
  curve.iauc = sum / static_cast<double>(steps + 1);
  return curve;
}

PointingResult pointing_game(const Tensor& saliency, const GroundTruthMask& gt) {
  require_plane_match(saliency, gt);
  const auto values = saliency.values();
  const std::size_t best = argmax(values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {gt.contains(best), *lo == *hi};
}

double PointingSummary::value() const {
  const std::size_t n = hits + misses;
  return n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
}

PointingSummary pointing_game(std::span<const Tensor> maps,
                              std::span<const GroundTruthMask> masks) {
  if (maps.size() != masks.size()) {
    throw Error(ErrorCode::kShapeMismatch, "one mask per map is required");
  }
  PointingSummary s;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const PointingResult r = pointing_game(maps[i], masks[i]);
    (r.hit ? s.hits : s.misses) += 1;
    if (r.constant_map) ++s.constant_maps;
  }
  return s;
}

double iosr(const Tensor& saliency, const GroundTruthMask& gt, double theta) {
  require_plane_match(saliency, gt);
  if (!(theta > 0.0 && theta < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "theta must be in (0,1)");
  }
  const float top = *std::max_element(saliency.values().begin(), saliency.values().end());
  if (!(top > 0.0f)) {
    throw Error(ErrorCode::kEmptySalientArea, "saliency maximum is not positive");
  }
  const double cut = theta * top;
  std::size_t area = 0, overlap = 0;
  for (std::size_t i = 0; i < saliency.size(); ++i) {
    if (saliency[i] > cut) {
      ++area;
      if (gt.contains(i)) ++overlap;
    }
  }
  if (area == 0) throw Error(ErrorCode::kEmptySalientArea, "no pixel above threshold");
  return static_cast<double>(overlap) / static_cast<double>(area);
}

double concept_contribution(const Tensor& saliency, const GroundTruthMask& concept_mask) {
  require_plane_match(saliency, concept_mask);
  return masked_sum(minmax_normalize(saliency), concept_mask) /
         static_cast<double>(concept_mask.area());
}

Contribution global_contribution(const Model& model, const Explainer& explainer,
                                 std::span<const Tensor> images,
                                 std::span<const GroundTruthMask> concept_masks,
                                 std::span<const std::size_t> labels) {
  if (images.size() != concept_masks.size() || images.size() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "images, masks and labels must align");
  }
  Contribution out;
  double sum = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (argmax(model.predict(images[i])) != labels[i]) {
      ++out.n_excluded;
      continue;
    }
    const SaliencyMap map = explainer(model, images[i], labels[i]);
    sum += concept_contribution(map.scores, concept_masks[i]);
    ++out.n_included;
  }
  if (out.n_included == 0) {
    throw Error(ErrorCode::kNoCorrectPredictions, "no image is classified correctly");
  }
  out.value = sum / static_cast<double>(out.n_included);
  return out;
}

double mcs(double g_object, double g_scene) { return g_object - g_scene; }

double contribution_ratio(const Tensor& saliency, const GroundTruthMask& concept_mask) {
  require_plane_match(saliency, concept_mask);
  const Tensor n = minmax_normalize(saliency);
  const double all = total(n);
  if (all == 0.0) return 0.0;
  return masked_sum(n, concept_mask) / static_cast<double>(concept_mask.area()) / all;
}

Contribution mcr(const Model& object_model, const Model& scene_model,
                 const Explainer& explainer, std::span<const ConceptPair> pairs) {
  Contribution out;
  double sum = 0.0;
  for (const ConceptPair& p : pairs) {
    const bool object_ok = argmax(object_model.predict(p.with_cf)) == p.object_label;
    const bool scene_ok = argmax(scene_model.predict(p.with_cf)) == p.scene_label;
    if (!object_ok || !scene_ok) {
      ++out.n_excluded;
      continue;
    }
    const SaliencyMap eo = explainer(object_model, p.with_cf, p.object_label);
    const SaliencyMap es = explainer(scene_model, p.with_cf, p.scene_label);
    sum += contribution_ratio(eo.scores, p.cf_mask) -
           contribution_ratio(es.scores, p.cf_mask);
    ++out.n_included;
  }
  if (out.n_included == 0) {
    throw Error(ErrorCode::kNoCorrectPredictions,
                "no image is classified correctly by both models");
  }
  out.value = sum / static_cast<double>(out.n_included);
  return out;
}

Contribution idr(const Model& scene_model, const Explainer& explainer,
                 std::span<const ConceptPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kUnpairedSample, "no pairs given");
  Contribution out;
  std::size_t hits = 0;
  for (const ConceptPair& p : pairs) {
    if (p.with_cf.shape() != p.without_cf.shape() || p.with_cf.rank() != 3 ||
        p.cf_mask.height() != p.with_cf.dim(1) ||
        p.cf_mask.width() != p.with_cf.dim(2)) {
      throw Error(ErrorCode::kUnpairedSample, "pair members do not line up");
    }
    const double with_cf = concept_contribution(
        explainer(scene_model, p.with_cf, p.scene_label).scores, p.cf_mask);
    const double twin = concept_contribution(
        explainer(scene_model, p.without_cf, p.scene_label).scores, p.cf_mask);
    if (with_cf > twin) ++hits;
    ++out.n_included;
  }
  out.value = static_cast<double>(hits) / static_cast<double>(out.n_included);
  return out;
}

double pearson(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "pearson needs equal nonempty inputs");
  }
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw Error(ErrorCode::kUndefined, "zero variance map");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double class_sensitivity(const Model& model, const Explainer& explainer,
                         const Tensor& image) {
  const std::vector<float> p = model.predict(image);
  const std::size_t hi = argmax(p), lo = argmin(p);
  const SaliencyMap a = explainer(model, image, hi);
  const SaliencyMap b = explainer(model, image, lo);
  return pearson(a.scores.values(), b.scores.values());
}

void PerturbationSpec::validate() const {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorCode::kInvalidArgument, "radius must be finite and >= 0");
  }
  if (samples < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one sample");
}

std::vector<double> unit_normalize(std::span<const float> map) {
  double ss = 0.0;
  for (float v : map) ss += static_cast<double>(v) * v;
  std::vector<double> out(map.size(), 0.0);
  if (ss == 0.0) return out;
  const double inv = 1.0 / std::sqrt(ss);
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = map[i] * inv;
  return out;
}

namespace {

// Max distance over `samples` draws at one radius; draws for radius slot j
// come from stream derive_seed(seed, j).
double sensitivity_at(const Model& model, const Explainer& explainer,
                      const Tensor& image, std::size_t class_index,
                      const std::vector<double>& base, double radius,
                      std::size_t samples, std::uint64_t stream_seed) {
  if (radius == 0.0) return 0.0;
  Rng rng(stream_seed);
  double worst = 0.0;
  Tensor perturbed(image.shape());
  for (std::size_t k = 0; k < samples; ++k) {
    for (std::size_t i = 0; i < image.size(); ++i) {
      const double v = image[i] + rng.uniform(-radius, radius);
      perturbed[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    const SaliencyMap e = explainer(model, perturbed, class_index);
    const std::vector<double> n = unit_normalize(e.scores.values());
    if (n.size() != base.size()) {
      throw Error(ErrorCode::kShapeMismatch, "explainer changed the map size");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) d += (n[i] - base[i]) * (n[i] - base[i]);
    worst = std::max(worst, std::sqrt(d));
  }
  return worst;
}

}  // namespace

double max_sensitivity(const Model& model, const Explainer& explainer,
                       const Tensor& image, std::size_t class_index,
                       const PerturbationSpec& spec) {
  spec.validate();
  const double radii[] = {spec.radius};
  return sensitivity_radius_sweep(model, explainer, image, class_index, radii,
                                  spec.samples, spec.seed)
      .front();
}

std::vector<double> sensitivity_radius_sweep(const Model& model,
                                             const Explainer& explainer,
                                             const Tensor& image,
                                             std::size_t class_index,
                                             std::span<const double> radii,
                                             std::size_t samples,
                                             std::uint64_t seed) {
  if (radii.empty()) throw Error(ErrorCode::kInvalidArgument, "no radii given");
  for (std::size_t j = 0; j < radii.size(); ++j) {
    PerturbationSpec{radii[j], samples, PerturbationNorm::kLinf, seed}.validate();
    if (j > 0 && radii[j] < radii[j - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "radii must be ascending");
    }
  }
  const std::vector<double> base =
      unit_normalize(explainer(model, image, class_index).scores.values());
  std::vector<double> curve;
  curve.reserve(radii.size());
  double running = 0.0;
  for (std::size_t j = 0; j < radii.size(); ++j) {
    running = std::max(running, sensitivity_at(model, explainer, image, class_index,
                                               base, radii[j], samples,
                                               derive_seed(seed, j)));
    curve.push_back(running);
  }
  return curve;
}

Tensor random_saliency(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor out({h, w});
  for (float& v : out.values()) v = static_cast<float>(rng.uniform());
  return out;
}

Explainer random_explainer(std::uint64_t seed) {
  return [seed](const Model& model, const Tensor& image, std::size_t c) {
    if (image.rank() != 3) throw Error(ErrorCode::kShapeMismatch, "expected [ch,h,w]");
    SaliencyMap map;
    map.scores = random_saliency(image.dim(1), image.dim(2),
                                 derive_seed(derive_seed(seed, hash_tensor(image)), c));
    map.method = "random";
    map.class_index = c;
    map.model_id = model.model_id();
    map.provenance = "uniform;seed=" + std::to_string(seed);
    return map;
  };
}

}  // namespace sbench
