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

#ifndef SALIENCYBENCH_SALIENCY_HPP_
#define SALIENCYBENCH_SALIENCY_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saliencybench/model.hpp"
#include "saliencybench/tensor.hpp"

namespace sbench {

enum class SaliencyMethod {
  kGradient,
  kGbp,
  kIntGrad,
  kGradCam,
  kCebp,
  kOcclusion,
  kRise,
};

inline constexpr SaliencyMethod kAllMethods[] = {
    SaliencyMethod::kGradient, SaliencyMethod::kGbp,  SaliencyMethod::kIntGrad,
    SaliencyMethod::kGradCam,  SaliencyMethod::kCebp, SaliencyMethod::kOcclusion,
    SaliencyMethod::kRise};

// "gradient", "gbp", "intgrad", "gradcam", "cebp", "occlusion", "rise".
const char* method_name(SaliencyMethod method);
std::optional<SaliencyMethod> method_from_name(const std::string& name);

enum class Normalization { kRaw, kMinMax };
const char* normalization_name(Normalization n);

// Relevance scores over the explained image's spatial grid.
struct SaliencyMap {
  Tensor scores;  // [h, w], finite
  std::string method;
  std::size_t class_index = 0;
  Normalization normalization = Normalization::kRaw;
  std::string model_id;
  // Conventions used to produce the map (score kind, reductions,
  // normalizers). Not persisted in the map file.
  std::string provenance;

  std::size_t height() const { return scores.dim(0); }
  std::size_t width() const { return scores.dim(1); }
};

// Min-max normalized copy (constant maps become all zeros).
SaliencyMap normalized(const SaliencyMap& map);

// RISE masks: s x s Bernoulli(p) grids, bilinearly upsampled to
// (s + 1) * ceil(side / s) and cropped at a random shift.
struct MaskSpec {
  std::size_t grid_size = 7;
  double keep_probability = 0.5;
  std::size_t mask_count = 4000;
  std::uint64_t seed = 0;

  void validate(std::size_t h, std::size_t w) const;
};

// Occlusion with an m x m patch slid at the given stride. The last row and
// column of patches is snapped to the border so every pixel is covered.
struct OcclusionSpec {
  std::size_t patch_size = 8;
  std::size_t stride = 4;
  float baseline = 0.0f;

  // m = round(h / 8) (at least 1), stride = max(1, m / 2), baseline 0.
  static OcclusionSpec defaults_for(std::size_t h, std::size_t w);
  void validate(std::size_t h, std::size_t w) const;
};

enum class RiseNormalization {
  kExpectation,  // divide by N * p
  kRawSum,       // plain sum of score-weighted masks
};

// Input-space methods reduce channels with max |.|.
SaliencyMap gradient_saliency(const Model& model, const Tensor& image,
                              std::size_t class_index,
                              ScoreKind score = ScoreKind::kLogit);
SaliencyMap gbp_saliency(const Model& model, const Tensor& image,
                         std::size_t class_index);

// Midpoint-rule path integral with `steps` gradient evaluations; returns the
// per-channel attributions (I - I') * mean gradient, shape [ch, h, w].
Tensor integrated_gradients(const Model& model, const Tensor& image,
                            std::size_t class_index, const Tensor& baseline,
                            std::size_t steps);
SaliencyMap intgrad_saliency(const Model& model, const Tensor& image,
                             std::size_t class_index, const Tensor& baseline,
                             std::size_t steps);

// layer defaults to model.target_layer().
SaliencyMap gradcam_saliency(const Model& model, const Tensor& image,
                             std::size_t class_index,
                             std::optional<std::string> layer = std::nullopt);
SaliencyMap cebp_saliency(const Model& model, const Tensor& image,
                          std::size_t class_index,
                          std::optional<std::string> layer = std::nullopt);

SaliencyMap occlusion_saliency(const Model& model, const Tensor& image,
                               std::size_t class_index,
                               const OcclusionSpec& spec);

// Mask `index` of the set described by spec; a pure function of
// (spec.seed, index).
Tensor rise_mask(const MaskSpec& spec, std::size_t index, std::size_t h,
                 std::size_t w);

// workers > 1 evaluates the masked forwards on a thread pool; the result is
// identical for any worker count.
SaliencyMap rise_saliency(
    const Model& model, const Tensor& image, std::size_t class_index,
    const MaskSpec& spec,
    RiseNormalization normalization = RiseNormalization::kExpectation,
    std::size_t workers = 1);

// RISE over caller-supplied [h, w] masks. The sum is divided by
// masks.size() * expected_keep_rate (pass 1 for a mask set of all ones).
SaliencyMap rise_saliency_with_masks(const Model& model, const Tensor& image,
                                     std::size_t class_index,
                                     std::span<const Tensor> masks,
                                     double expected_keep_rate);

// Bundles a method with its parameters so metrics can call it uniformly.
struct ExplainerConfig {
  SaliencyMethod method = SaliencyMethod::kGradient;
  std::optional<std::string> layer;          // Grad-CAM / CEBP
  std::size_t intgrad_steps = 64;
  float intgrad_baseline = 0.0f;             // constant baseline image
  std::optional<OcclusionSpec> occlusion;    // defaults_for(h, w) if unset
  MaskSpec rise;
  std::size_t workers = 1;                   // RISE forwards
};

using Explainer =
    std::function<SaliencyMap(const Model&, const Tensor&, std::size_t)>;

Explainer make_explainer(const ExplainerConfig& config);

// SBSM0001 container: magic, u64 LE header length, JSON header
// {h, w, method, class, normalization, model_id}, then h*w float32 LE.
void write_saliency_map(const std::filesystem::path& path,
                        const SaliencyMap& map);
SaliencyMap read_saliency_map(const std::filesystem::path& path);
// Min-max normalized map as an 8-bit PGM.
void write_saliency_pgm(const std::filesystem::path& path,
                        const SaliencyMap& map);

}  // namespace sbench

#endif  // SALIENCYBENCH_SALIENCY_HPP_
