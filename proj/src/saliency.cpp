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

#include "saliencybench/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "saliencybench/error.hpp"
#include "saliencybench/image_ops.hpp"
#include "saliencybench/parallel.hpp"
#include "saliencybench/rng.hpp"
#include "saliencybench/simd/kernels.hpp"

namespace sbench {
namespace {

std::size_t spatial_h(const Tensor& image) { return image.dim(1); }
std::size_t spatial_w(const Tensor& image) { return image.dim(2); }

void check_image(const Tensor& image) {
  if (image.rank() != 3) {
    throw Error(ErrorCode::kShapeMismatch,
                "explainers take [ch,h,w] images, got " +
                    shape_to_string(image.shape()));
  }
}

SaliencyMap finish(Tensor scores, SaliencyMethod method, std::size_t c,
                   const Model& model, std::string provenance) {
  if (!scores.all_finite()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(method_name(method)) + " produced non-finite scores");
  }
  SaliencyMap map;
  map.scores = std::move(scores);
  map.method = method_name(method);
  map.class_index = c;
  map.model_id = model.model_id();
  map.provenance = std::move(provenance);
  return map;
}

void check_class(const Model& model, std::size_t c) {
  if (c >= model.num_classes()) {
    throw Error(ErrorCode::kClassOutOfRange,
                "class " + std::to_string(c) + " not in [0," +
                    std::to_string(model.num_classes()) + ")");
  }
}

void require(const Model& model, Capability cap) {
  if (!model.capabilities().has(cap)) {
    throw Error(ErrorCode::kCapabilityMissing,
                "model " + model.model_id() + " lacks " + capability_name(cap));
  }
}

std::string resolve_layer(const Model& model, std::optional<std::string> layer) {
  if (layer) return *layer;
  if (auto t = model.target_layer()) return *t;
  throw Error(ErrorCode::kUnknownLayer,
              "no target layer given and model " + model.model_id() +
                  " declares none");
}

// Patch origins along one axis: 0, stride, 2*stride, ... plus a final origin
// snapped to side - m when the regular grid stops short of the border.
std::vector<std::size_t> patch_origins(std::size_t side, std::size_t m,
                                       std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t o = 0; o + m <= side; o += stride) out.push_back(o);
  if (out.empty() || out.back() + m < side) out.push_back(side - m);
  return out;
}

std::string format_double(double v) {
  std::ostringstream s;
  s.precision(9);
  s << v;
  return s.str();
}

}  // namespace

const char* method_name(SaliencyMethod method) {
  switch (method) {
    case SaliencyMethod::kGradient: return "gradient";
    case SaliencyMethod::kGbp: return "gbp";
    case SaliencyMethod::kIntGrad: return "intgrad";
    case SaliencyMethod::kGradCam: return "gradcam";
    case SaliencyMethod::kCebp: return "cebp";
    case SaliencyMethod::kOcclusion: return "occlusion";
    case SaliencyMethod::kRise: return "rise";
  }
  return "unknown";
}

std::optional<SaliencyMethod> method_from_name(const std::string& name) {
  for (SaliencyMethod m : kAllMethods) {
    if (name == method_name(m)) return m;
  }
  return std::nullopt;
}

const char* normalization_name(Normalization n) {
  return n == Normalization::kRaw ? "raw" : "minmax";
}

SaliencyMap normalized(const SaliencyMap& map) {
  SaliencyMap out = map;
  out.scores = minmax_normalize(map.scores);
  out.normalization = Normalization::kMinMax;
  return out;
}

void MaskSpec::validate(std::size_t h, std::size_t w) const {
  if (grid_size < 1 || grid_size > std::min(h, w)) {
    throw Error(ErrorCode::kInvalidArgument, "mask grid size must be in [1, min(h,w)]");
  }
  if (!(keep_probability > 0.0 && keep_probability < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "keep probability must be in (0,1)");
  }
  if (mask_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "mask count must be >= 1");
  }
}

OcclusionSpec OcclusionSpec::defaults_for(std::size_t h, std::size_t /*w*/) {
  OcclusionSpec spec;
  spec.patch_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(static_cast<double>(h) / 8.0)));
  spec.stride = std::max<std::size_t>(1, spec.patch_size / 2);
  spec.baseline = 0.0f;
  return spec;
}

void OcclusionSpec::validate(std::size_t h, std::size_t w) const {
  if (patch_size < 1 || patch_size > std::min(h, w)) {
    throw Error(ErrorCode::kInvalidArgument, "patch size must be in [1, min(h,w)]");
  }
  if (stride < 1 || stride > patch_size) {
    throw Error(ErrorCode::kInvalidArgument, "stride must be in [1, patch size]");
  }
}

SaliencyMap gradient_saliency(const Model& model, const Tensor& image,
                              std::size_t class_index, ScoreKind score) {
  check_image(image);
  require(model, Capability::kInputGrad);
  check_class(model, class_index);
  Tensor grad = model.input_gradient(image, class_index, score);
  return finish(channel_max_abs(grad), SaliencyMethod::kGradient, class_index,
                model,
                std::string("score=") +
                    (score == ScoreKind::kLogit ? "logit" : "probability") +
                    ";reduction=max_abs_channels");
}

SaliencyMap gbp_saliency(const Model& model, const Tensor& image,
                         std::size_t class_index) {
  check_image(image);
  require(model, Capability::kGuided);
  check_class(model, class_index);
  return finish(channel_max_abs(model.guided_backward(image, class_index)),
                SaliencyMethod::kGbp, class_index, model,
                "score=logit;reduction=max_abs_channels");
}

Tensor integrated_gradients(const Model& model, const Tensor& image,
                            std::size_t class_index, const Tensor& baseline,
                            std::size_t steps) {
  check_image(image);
  require(model, Capability::kInputGrad);
  check_class(model, class_index);
  if (baseline.shape() != image.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "baseline must match the image shape");
  }
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "steps must be >= 1");
  const std::size_t n = image.size();
  std::vector<double> total(n, 0.0);
  Tensor point(image.shape());
  for (std::size_t k = 0; k < steps; ++k) {
    const double alpha = (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
    for (std::size_t i = 0; i < n; ++i) {
      point[i] = static_cast<float>(baseline[i] + alpha * (image[i] - baseline[i]));
    }
    const Tensor g = model.input_gradient(point, class_index, ScoreKind::kLogit);
    for (std::size_t i = 0; i < n; ++i) total[i] += g[i];
  }
  Tensor out(image.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = static_cast<double>(image[i]) - baseline[i];
    out[i] = static_cast<float>(diff * total[i] / static_cast<double>(steps));
  }
  return out;
}

SaliencyMap intgrad_saliency(const Model& model, const Tensor& image,
                             std::size_t class_index, const Tensor& baseline,
                             std::size_t steps) {
  Tensor attr = integrated_gradients(model, image, class_index, baseline, steps);
  return finish(channel_max_abs(attr), SaliencyMethod::kIntGrad, class_index,
                model,
                "score=logit;reduction=max_abs_channels;rule=midpoint;steps=" +
                    std::to_string(steps));
}

SaliencyMap gradcam_saliency(const Model& model, const Tensor& image,
                             std::size_t class_index,
                             std::optional<std::string> layer) {
  check_image(image);
  require(model, Capability::kLayerIntrospect);
  check_class(model, class_index);
  const std::string name = resolve_layer(model, std::move(layer));
  const LayerGradients lg =
      model.layer_activations_and_gradients(image, class_index, name);
  if (lg.activations.rank() != 3) {
    throw Error(ErrorCode::kShapeMismatch,
                "Grad-CAM needs a spatial [k,h,w] layer, " + name + " is " +
                    shape_to_string(lg.activations.shape()));
  }
  const std::size_t K = lg.activations.dim(0);
  const std::size_t plane = lg.activations.dim(1) * lg.activations.dim(2);
  Tensor cam({lg.activations.dim(1), lg.activations.dim(2)});
  std::vector<double> acc(plane, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    double weight = 0.0;
    for (std::size_t j = 0; j < plane; ++j) weight += lg.gradients[k * plane + j];
    weight /= static_cast<double>(plane);
    for (std::size_t j = 0; j < plane; ++j) {
      acc[j] += weight * lg.activations[k * plane + j];
    }
  }
  for (std::size_t j = 0; j < plane; ++j) {
    cam[j] = acc[j] > 0.0 ? static_cast<float>(acc[j]) : 0.0f;
  }
  return finish(bilinear_resize(cam, spatial_h(image), spatial_w(image)),
                SaliencyMethod::kGradCam, class_index, model,
                "score=logit;layer=" + name + ";upsample=bilinear");
}

SaliencyMap cebp_saliency(const Model& model, const Tensor& image,
                          std::size_t class_index,
                          std::optional<std::string> layer) {
  check_image(image);
  require(model, Capability::kExcitation);
  check_class(model, class_index);
  const std::string name = resolve_layer(model, std::move(layer));
  const Tensor low = model.excitation_propagate(image, class_index, name, true);
  if (low.rank() != 2) {
    throw Error(ErrorCode::kShapeMismatch,
                "CEBP needs a spatial layer, " + name + " is not");
  }
  return finish(bilinear_resize(low, spatial_h(image), spatial_w(image)),
                SaliencyMethod::kCebp, class_index, model,
                "contrastive=1;layer=" + name + ";upsample=bilinear;clip=none");
}

SaliencyMap occlusion_saliency(const Model& model, const Tensor& image,
                               std::size_t class_index,
                               const OcclusionSpec& spec) {
  check_image(image);
  check_class(model, class_index);
  const std::size_t ch = image.dim(0), h = spatial_h(image), w = spatial_w(image);
  spec.validate(h, w);
  const std::size_t m = spec.patch_size;
  const double full = model.predict(image)[class_index];
  const double area = static_cast<double>(m * m);

  std::vector<double> sum(h * w, 0.0);
  std::vector<std::size_t> count(h * w, 0);
  Tensor occluded = image;
  for (std::size_t y0 : patch_origins(h, m, spec.stride)) {
    for (std::size_t x0 : patch_origins(w, m, spec.stride)) {
      occluded = image;
      for (std::size_t c = 0; c < ch; ++c) {
        for (std::size_t y = y0; y < y0 + m; ++y) {
          for (std::size_t x = x0; x < x0 + m; ++x) occluded(c, y, x) = spec.baseline;
        }
      }
      const double diff =
          (full - static_cast<double>(model.predict(occluded)[class_index])) / area;
      for (std::size_t y = y0; y < y0 + m; ++y) {
        for (std::size_t x = x0; x < x0 + m; ++x) {
          sum[y * w + x] += diff;
          ++count[y * w + x];
        }
      }
    }
  }
  Tensor scores({h, w});
  for (std::size_t i = 0; i < h * w; ++i) {
    scores[i] = count[i] ? static_cast<float>(sum[i] / static_cast<double>(count[i]))
                         : 0.0f;
  }
  return finish(std::move(scores), SaliencyMethod::kOcclusion, class_index, model,
                "score=probability;patch=" + std::to_string(m) +
                    ";stride=" + std::to_string(spec.stride) +
                    ";baseline=" + format_double(spec.baseline) +
                    ";normalization=mean_over_covering_patches_div_m2");
}

Tensor rise_mask(const MaskSpec& spec, std::size_t index, std::size_t h,
                 std::size_t w) {
  spec.validate(h, w);
  const std::size_t s = spec.grid_size;
  Rng rng(derive_seed(spec.seed, index));
  Tensor grid({s, s});
  for (float& v : grid.values()) v = rng.bernoulli(spec.keep_probability) ? 1.0f : 0.0f;
  const std::size_t cell_h = (h + s - 1) / s;
  const std::size_t cell_w = (w + s - 1) / s;
  const Tensor up = bilinear_resize(grid, (s + 1) * cell_h, (s + 1) * cell_w);
  const std::size_t dy = rng.index(cell_h);
  const std::size_t dx = rng.index(cell_w);
  Tensor mask({h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) mask(y, x) = up(y + dy, x + dx);
  }
  return mask;
}

namespace {

// Shared body: score every masked image, then accumulate in mask order.
template <typename MaskAt>
Tensor rise_accumulate(const Model& model, const Tensor& image,
                       std::size_t class_index, std::size_t count,
                       MaskAt&& mask_at, std::size_t workers) {
  const std::size_t ch = image.dim(0), h = spatial_h(image), w = spatial_w(image);
  const std::size_t plane = h * w;
  std::vector<double> scores(count);
  parallel_for(count, workers, [&](std::size_t i) {
    const Tensor mask = mask_at(i);
    Tensor masked(image.shape());
    for (std::size_t c = 0; c < ch; ++c) {
      simd::kernels().hadamard(image.data() + c * plane, mask.data(),
                               masked.data() + c * plane, plane);
    }
    scores[i] = model.predict(masked)[class_index];
  });
  std::vector<double> acc(plane, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const Tensor mask = mask_at(i);
    for (std::size_t j = 0; j < plane; ++j) acc[j] += scores[i] * mask[j];
  }
  Tensor out({h, w});
  for (std::size_t j = 0; j < plane; ++j) out[j] = static_cast<float>(acc[j]);
  return out;
}

}  // namespace

SaliencyMap rise_saliency(const Model& model, const Tensor& image,
                          std::size_t class_index, const MaskSpec& spec,
                          RiseNormalization normalization, std::size_t workers) {
  check_image(image);
  check_class(model, class_index);
  const std::size_t h = spatial_h(image), w = spatial_w(image);
  spec.validate(h, w);
  Tensor sum = rise_accumulate(
      model, image, class_index, spec.mask_count,
      [&](std::size_t i) { return rise_mask(spec, i, h, w); }, workers);
  std::string norm = "raw_sum";
  if (normalization == RiseNormalization::kExpectation) {
    const double denom = static_cast<double>(spec.mask_count) * spec.keep_probability;
    for (float& v : sum.values()) v = static_cast<float>(v / denom);
    norm = "n_times_p";
  }
  return finish(std::move(sum), SaliencyMethod::kRise, class_index, model,
                "score=probability;s=" + std::to_string(spec.grid_size) +
                    ";p=" + format_double(spec.keep_probability) +
                    ";n=" + std::to_string(spec.mask_count) +
                    ";seed=" + std::to_string(spec.seed) + ";normalization=" + norm);
}

SaliencyMap rise_saliency_with_masks(const Model& model, const Tensor& image,
                                     std::size_t class_index,
                                     std::span<const Tensor> masks,
                                     double expected_keep_rate) {
  check_image(image);
  check_class(model, class_index);
  if (masks.empty() || !(expected_keep_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "need at least one mask and a positive keep rate");
  }
  const Shape plane_shape{spatial_h(image), spatial_w(image)};
  for (const Tensor& m : masks) {
    if (m.shape() != plane_shape) {
      throw Error(ErrorCode::kShapeMismatch, "masks must be [h,w] of the image");
    }
  }
  Tensor sum = rise_accumulate(
      model, image, class_index, masks.size(),
      [&](std::size_t i) { return masks[i]; }, 1);
  const double denom = static_cast<double>(masks.size()) * expected_keep_rate;
  for (float& v : sum.values()) v = static_cast<float>(v / denom);
  return finish(std::move(sum), SaliencyMethod::kRise, class_index, model,
                "score=probability;masks=explicit;keep_rate=" +
                    format_double(expected_keep_rate));
}

Explainer make_explainer(const ExplainerConfig& config) {
  switch (config.method) {
    case SaliencyMethod::kGradient:
      return [](const Model& m, const Tensor& img, std::size_t c) {
        return gradient_saliency(m, img, c);
      };
    case SaliencyMethod::kGbp:
      return [](const Model& m, const Tensor& img, std::size_t c) {
        return gbp_saliency(m, img, c);
      };
    case SaliencyMethod::kIntGrad:
      return [steps = config.intgrad_steps, base = config.intgrad_baseline](
                 const Model& m, const Tensor& img, std::size_t c) {
        return intgrad_saliency(m, img, c, Tensor(img.shape(), base), steps);
      };
    case SaliencyMethod::kGradCam:
      return [layer = config.layer](const Model& m, const Tensor& img, std::size_t c) {
        return gradcam_saliency(m, img, c, layer);
      };
    case SaliencyMethod::kCebp:
      return [layer = config.layer](const Model& m, const Tensor& img, std::size_t c) {
        return cebp_saliency(m, img, c, layer);
      };
    case SaliencyMethod::kOcclusion:
      return [spec = config.occlusion](const Model& m, const Tensor& img,
                                       std::size_t c) {
        check_image(img);
        return occlusion_saliency(
            m, img, c, spec ? *spec : OcclusionSpec::defaults_for(img.dim(1), img.dim(2)));
      };
    case SaliencyMethod::kRise:
      return [spec = config.rise, workers = config.workers](
                 const Model& m, const Tensor& img, std::size_t c) {
        return rise_saliency(m, img, c, spec, RiseNormalization::kExpectation,
                             workers);
      };
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown saliency method");
}

}  // namespace sbench
