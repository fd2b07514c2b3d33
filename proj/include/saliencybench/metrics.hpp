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

#ifndef SALIENCYBENCH_METRICS_HPP_
#define SALIENCYBENCH_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "saliencybench/model.hpp"
#include "saliencybench/saliency.hpp"
#include "saliencybench/tensor.hpp"

namespace sbench {

enum class MaskKind { kBoundingBox, kSegmentation, kConcept };

// Binary [h, w] mask with at least one set pixel.
class GroundTruthMask {
 public:
  // Values must be exactly 0 or 1. Throws kInvalidArgument, kEmptyMask.
  explicit GroundTruthMask(Tensor mask, MaskKind kind = MaskKind::kSegmentation);

  const Tensor& mask() const noexcept { return mask_; }
  MaskKind kind() const noexcept { return kind_; }
  std::size_t height() const { return mask_.dim(0); }
  std::size_t width() const { return mask_.dim(1); }
  bool contains(std::size_t i) const { return mask_[i] != 0.0f; }
  std::size_t area() const noexcept { return area_; }
  double fraction() const {
    return static_cast<double>(area_) / static_cast<double>(mask_.size());
  }

 private:
  Tensor mask_;
  MaskKind kind_;
  std::size_t area_ = 0;
};

// ---------------------------------------------------------------------------
// Faithfulness

struct InsertionCurve {
  std::vector<double> fractions;  // share of pixels inserted at each state
  std::vector<double> scores;     // f_c(state) - f_c(reference)
  double iauc = 0.0;              // mean of scores
};

// Pixel indices in descending saliency order; equal scores keep index order.
std::vector<std::size_t> insertion_order(const Tensor& saliency);

// Inserts pixels (all channels at once) from reference toward image in
// `steps` equal batches; state k holds the first floor(k * n / steps) pixels
// of the order. Scores use the softmax probability of class c and cover all
// steps + 1 states, the empty insertion included. steps = h * w gives the
// per-pixel curve.
InsertionCurve insertion_auc(const Model& model, const Tensor& image,
                             std::size_t class_index, const Tensor& saliency,
                             const Tensor& reference, std::size_t steps = 100);

// ---------------------------------------------------------------------------
// Localization

inline constexpr double kDefaultIosrThreshold = 0.5;

struct PointingResult {
  bool hit = false;
  bool constant_map = false;  // every score equal; argmax falls on (0, 0)
};

// Argmax with row-major tie-break.
PointingResult pointing_game(const Tensor& saliency, const GroundTruthMask& gt);

struct PointingSummary {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t constant_maps = 0;
  double value() const;  // hits / (hits + misses); 0 when empty
};
PointingSummary pointing_game(std::span<const Tensor> maps,
                              std::span<const GroundTruthMask> masks);

// |SA & M| / |SA| with SA = {E > theta * max E}. Throws kEmptySalientArea
// when max E <= 0 or SA is empty.
double iosr(const Tensor& saliency, const GroundTruthMask& gt,
            double theta = kDefaultIosrThreshold);

// ---------------------------------------------------------------------------
// Concept contribution. Maps are min-max normalized before use.

// sum(n(E) * M) / sum(M).
double concept_contribution(const Tensor& saliency, const GroundTruthMask& concept_mask);

struct Contribution {
  double value = 0.0;
  std::size_t n_included = 0;
  std::size_t n_excluded = 0;
};

// Mean concept contribution over images the model classifies correctly,
// explaining the labelled class. Throws kNoCorrectPredictions.
Contribution global_contribution(const Model& model, const Explainer& explainer,
                                 std::span<const Tensor> images,
                                 std::span<const GroundTruthMask> concept_masks,
                                 std::span<const std::size_t> labels);

// G_cf(f_o) - G_cf(f_s).
double mcs(double g_object, double g_scene);

// One with-CF image, its CF-free twin and both labels.
struct ConceptPair {
  Tensor with_cf;
  Tensor without_cf;
  GroundTruthMask cf_mask;
  std::size_t object_label = 0;
  std::size_t scene_label = 0;
};

// Per-image ratio sum(n(E) * M) / sum(M) / sum(n(E)); 0 for an all-zero
// normalized map.
double contribution_ratio(const Tensor& saliency, const GroundTruthMask& concept_mask);

// Mean over with-CF images that both models classify correctly of
// ratio(f_o, object label) - ratio(f_s, scene label).
// Throws kNoCorrectPredictions.
Contribution mcr(const Model& object_model, const Model& scene_model,
                 const Explainer& explainer, std::span<const ConceptPair> pairs);

// Share of pairs whose CF-region contribution on the with-CF image strictly
// exceeds that of the same region on the twin, explaining the scene class
// with the scene model. Throws kUnpairedSample on shape disagreement.
Contribution idr(const Model& scene_model, const Explainer& explainer,
                 std::span<const ConceptPair> pairs);

// ---------------------------------------------------------------------------
// Sensitivity check

// Pearson correlation of the flattened arrays. Throws kUndefined when either
// has zero variance.
double pearson(std::span<const float> a, std::span<const float> b);

// Correlation between the maps of the most and least confident classes.
double class_sensitivity(const Model& model, const Explainer& explainer,
                         const Tensor& image);

// ---------------------------------------------------------------------------
// Stability

inline constexpr double kDefaultSensitivityRadius = 0.2;

enum class PerturbationNorm { kLinf };

struct PerturbationSpec {
  double radius = kDefaultSensitivityRadius;
  std::size_t samples = 10;
  PerturbationNorm norm = PerturbationNorm::kLinf;
  std::uint64_t seed = 0;

  void validate() const;
};

// Unit l2 normalization; the zero map stays zero.
std::vector<double> unit_normalize(std::span<const float> map);

// max_k ||n(E(I + delta_k)) - n(E(I))||_2 over spec.samples perturbations
// drawn uniformly from the l-inf ball, perturbed images clamped to [0, 1].
double max_sensitivity(const Model& model, const Explainer& explainer,
                       const Tensor& image, std::size_t class_index,
                       const PerturbationSpec& spec);

// SENS_max at each radius (ascending). Samples are nested: the estimate at
// radii[j] is the max over all samples drawn for radii[0..j], so the curve is
// nondecreasing. The first radius matches max_sensitivity with that radius.
std::vector<double> sensitivity_radius_sweep(const Model& model,
                                             const Explainer& explainer,
                                             const Tensor& image,
                                             std::size_t class_index,
                                             std::span<const double> radii,
                                             std::size_t samples,
                                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Baselines

// i.i.d. uniform [0, 1) scores.
Tensor random_saliency(std::size_t h, std::size_t w, std::uint64_t seed);

// Explainer returning random_saliency seeded from (seed, image bytes, class),
// so the same input always gets the same map regardless of call order.
Explainer random_explainer(std::uint64_t seed);

}  // namespace sbench

#endif  // SALIENCYBENCH_METRICS_HPP_
