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

#include "saliencybench/micro_cnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include "saliencybench/error.hpp"
#include "saliencybench/rng.hpp"
#include "saliencybench/simd/kernels.hpp"

namespace sbench {
namespace {

struct ConvGeometry {
  std::size_t cin, h, w, cout, k, pad, ho, wo;
  std::size_t rows() const { return cin * k * k; }     // Q
  std::size_t cols() const { return ho * wo; }         // P
};

ConvGeometry conv_geometry(const Layer& layer, const Shape& in) {
  ConvGeometry g{};
  g.cin = in[0];
  g.h = in[1];
  g.w = in[2];
  g.cout = layer.out_channels;
  g.k = layer.kernel;
  g.pad = layer.padding;
  g.ho = g.h + 2 * g.pad - g.k + 1;
  g.wo = g.w + 2 * g.pad - g.k + 1;
  return g;
}

// col[q, p] with q = (ci * k + ky) * k + kx and p = oy * wo + ox.
void im2col(const float* in, const ConvGeometry& g, float* col) {
  const std::size_t P = g.cols();
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        float* row = col + ((ci * g.k + ky) * g.k + kx) * P;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy + ky) -
                          static_cast<std::ptrdiff_t>(g.pad);
          float* dst = row + oy * g.wo;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(dst, dst + g.wo, 0.0f);
            continue;
          }
          const float* src = in + (ci * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w))
                          ? 0.0f
                          : src[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const float* col, const ConvGeometry& g, float* in_grad) {
  const std::size_t P = g.cols();
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const float* row = col + ((ci * g.k + ky) * g.k + kx) * P;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy + ky) -
                          static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          float* dst = in_grad + (ci * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            dst[ix] += row[oy * g.wo + ox];
          }
        }
      }
    }
  }
}

void conv_forward(const Layer& layer, const ConvGeometry& g, const Tensor& in,
                  Tensor& out) {
  const auto& k = simd::kernels();
  const std::size_t Q = g.rows(), P = g.cols();
  std::vector<float> col(Q * P);
  im2col(in.data(), g, col.data());
  for (std::size_t o = 0; o < g.cout; ++o) {
    float* dst = out.data() + o * P;
    std::fill(dst, dst + P, layer.bias[o]);
    const float* w = layer.weight.data() + o * Q;
    for (std::size_t q = 0; q < Q; ++q) {
      if (w[q] != 0.0f) k.axpy(w[q], col.data() + q * P, dst, P);
    }
  }
}

void conv_backward_input(const Layer& layer, const ConvGeometry& g,
                         const Tensor& out_grad, Tensor& in_grad) {
  const auto& k = simd::kernels();
  const std::size_t Q = g.rows(), P = g.cols();
  std::vector<float> dcol(Q * P, 0.0f);
  for (std::size_t o = 0; o < g.cout; ++o) {
    const float* w = layer.weight.data() + o * Q;
    const float* src = out_grad.data() + o * P;
    for (std::size_t q = 0; q < Q; ++q) {
      if (w[q] != 0.0f) k.axpy(w[q], src, dcol.data() + q * P, P);
    }
  }
  in_grad.fill(0.0f);
  col2im_add(dcol.data(), g, in_grad.data());
}

void maxpool_forward(const Tensor& in, Tensor& out) {
  const std::size_t C = out.dim(0), ho = out.dim(1), wo = out.dim(2);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t x = 0; x < wo; ++x) {
        float m = in(c, 2 * y, 2 * x);
        m = std::max(m, in(c, 2 * y, 2 * x + 1));
        m = std::max(m, in(c, 2 * y + 1, 2 * x));
        m = std::max(m, in(c, 2 * y + 1, 2 * x + 1));
        out(c, y, x) = m;
      }
    }
  }
}

// Routes out-signal to the first maximal input of each window (row-major
// window order), the same switch the forward max took.
void maxpool_route(const Tensor& in, const Tensor& out_signal,
                   Tensor& in_signal) {
  in_signal.fill(0.0f);
  const std::size_t C = out_signal.dim(0), ho = out_signal.dim(1),
                    wo = out_signal.dim(2);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t x = 0; x < wo; ++x) {
        std::size_t by = 2 * y, bx = 2 * x;
        float best = in(c, by, bx);
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const float v = in(c, 2 * y + dy, 2 * x + dx);
            if (v > best) {
              best = v;
              by = 2 * y + dy;
              bx = 2 * x + dx;
            }
          }
        }
        in_signal(c, by, bx) += out_signal(c, y, x);
      }
    }
  }
}

}  // namespace

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kDense: return "dense";
  }
  return "unknown";
}

std::optional<LayerKind> layer_kind_from_name(const std::string& name) {
  for (LayerKind k : {LayerKind::kConv, LayerKind::kRelu, LayerKind::kMaxPool,
                      LayerKind::kFlatten, LayerKind::kDense}) {
    if (name == layer_kind_name(k)) return k;
  }
  return std::nullopt;
}

Layer Layer::conv(std::string name, std::size_t in, std::size_t out,
                  std::size_t kernel, std::size_t padding) {
  Layer l;
  l.kind = LayerKind::kConv;
  l.name = std::move(name);
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = kernel;
  l.padding = padding;
  l.weight = Tensor({out, in, kernel, kernel});
  l.bias = Tensor({out});
  return l;
}

Layer Layer::dense(std::string name, std::size_t in, std::size_t out) {
  Layer l;
  l.kind = LayerKind::kDense;
  l.name = std::move(name);
  l.in_features = in;
  l.out_features = out;
  l.weight = Tensor({out, in});
  l.bias = Tensor({out});
  return l;
}

Layer Layer::relu(std::string name) {
  Layer l;
  l.kind = LayerKind::kRelu;
  l.name = std::move(name);
  return l;
}

Layer Layer::max_pool(std::string name) {
  Layer l;
  l.kind = LayerKind::kMaxPool;
  l.name = std::move(name);
  return l;
}

Layer Layer::flatten(std::string name) {
  Layer l;
  l.kind = LayerKind::kFlatten;
  l.name = std::move(name);
  return l;
}

MicroCnn MicroCnn::reference(const ArchitectureSpec& spec, std::uint64_t seed) {
  if (spec.input_shape.size() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "input shape must be [ch,h,w]");
  }
  std::vector<Layer> layers;
  std::size_t channels = spec.input_shape[0];
  std::size_t h = spec.input_shape[1], w = spec.input_shape[2];
  std::size_t stage = 0;
  for (std::size_t width : spec.conv_channels) {
    ++stage;
    const std::string s = std::to_string(stage);
    layers.push_back(Layer::conv("conv" + s, channels, width, 3, 1));
    layers.push_back(Layer::relu("relu" + s));
    layers.push_back(Layer::max_pool("pool" + s));
    channels = width;
    h /= 2;
    w /= 2;
  }
  layers.push_back(Layer::flatten("flatten"));
  std::size_t features = channels * h * w;
  std::size_t dense_index = 0;
  if (spec.hidden_units > 0) {
    layers.push_back(Layer::dense("dense" + std::to_string(++dense_index),
                                  features, spec.hidden_units));
    layers.push_back(Layer::relu("relu" + std::to_string(++stage)));
    features = spec.hidden_units;
  }
  layers.push_back(Layer::dense("dense" + std::to_string(++dense_index),
                                features, spec.num_classes));

  // He initialization, biases zero.
  Rng rng(seed);
  for (Layer& layer : layers) {
    if (!layer.has_params()) continue;
    const std::size_t fan_in = layer.weight.size() / layer.weight.dim(0);
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (float& v : layer.weight.values()) {
      v = static_cast<float>(rng.normal() * stddev);
    }
  }
  return MicroCnn(spec.input_shape, spec.num_classes, std::move(layers), seed);
}

MicroCnn::MicroCnn(Shape input_shape, std::size_t num_classes,
                   std::vector<Layer> layers, std::uint64_t seed)
    : input_shape_(std::move(input_shape)),
      num_classes_(num_classes),
      layers_(std::move(layers)),
      seed_(seed) {
  validate_and_infer_shapes();
}

MicroCnn::MicroCnn(const MicroCnn& other)
    : input_shape_(other.input_shape_),
      num_classes_(other.num_classes_),
      layers_(other.layers_),
      activation_shapes_(other.activation_shapes_),
      seed_(other.seed_),
      model_id_(other.model_id_),
      target_layer_(other.target_layer_),
      degenerate_units_(other.degenerate_unit_count()) {}

MicroCnn& MicroCnn::operator=(const MicroCnn& other) {
  if (this != &other) {
    input_shape_ = other.input_shape_;
    num_classes_ = other.num_classes_;
    layers_ = other.layers_;
    activation_shapes_ = other.activation_shapes_;
    seed_ = other.seed_;
    model_id_ = other.model_id_;
    target_layer_ = other.target_layer_;
    degenerate_units_.store(other.degenerate_unit_count());
  }
  return *this;
}

MicroCnn::MicroCnn(MicroCnn&& other) noexcept
    : input_shape_(std::move(other.input_shape_)),
      num_classes_(other.num_classes_),
      layers_(std::move(other.layers_)),
      activation_shapes_(std::move(other.activation_shapes_)),
      seed_(other.seed_),
      model_id_(std::move(other.model_id_)),
      target_layer_(std::move(other.target_layer_)),
      degenerate_units_(other.degenerate_unit_count()) {}

MicroCnn& MicroCnn::operator=(MicroCnn&& other) noexcept {
  if (this != &other) {
    input_shape_ = std::move(other.input_shape_);
    num_classes_ = other.num_classes_;
    layers_ = std::move(other.layers_);
    activation_shapes_ = std::move(other.activation_shapes_);
    seed_ = other.seed_;
    model_id_ = std::move(other.model_id_);
    target_layer_ = std::move(other.target_layer_);
    degenerate_units_.store(other.degenerate_unit_count());
  }
  return *this;
}

MicroCnn::~MicroCnn() = default;

void MicroCnn::validate_and_infer_shapes() {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kShapeMismatch, msg);
  };
  if (input_shape_.size() != 3 || shape_size(input_shape_) == 0) {
    fail("input shape must be a nonempty [ch,h,w]");
  }
  if (layers_.empty() || layers_.back().kind != LayerKind::kDense ||
      layers_.back().out_features != num_classes_ || num_classes_ == 0) {
    fail("last layer must be dense with num_classes outputs");
  }
  std::set<std::string> names;
  activation_shapes_.clear();
  activation_shapes_.push_back(input_shape_);
  Shape cur = input_shape_;
  for (const Layer& layer : layers_) {
    if (layer.name.empty() || !names.insert(layer.name).second) {
      fail("layer names must be unique and nonempty");
    }
    switch (layer.kind) {
      case LayerKind::kConv: {
        if (cur.size() != 3 || cur[0] != layer.in_channels) {
          fail(layer.name + ": input channels mismatch");
        }
        if (layer.weight.shape() !=
                Shape{layer.out_channels, layer.in_channels, layer.kernel,
                      layer.kernel} ||
            layer.bias.shape() != Shape{layer.out_channels}) {
          fail(layer.name + ": parameter shapes");
        }
        if (cur[1] + 2 * layer.padding < layer.kernel ||
            cur[2] + 2 * layer.padding < layer.kernel) {
          fail(layer.name + ": kernel larger than padded input");
        }
        cur = {layer.out_channels, cur[1] + 2 * layer.padding - layer.kernel + 1,
               cur[2] + 2 * layer.padding - layer.kernel + 1};
        break;
      }
      case LayerKind::kRelu:
        break;
      case LayerKind::kMaxPool:
        if (cur.size() != 3 || cur[1] < 2 || cur[2] < 2) {
          fail(layer.name + ": max pool needs a [c,h,w] input with h,w >= 2");
        }
        cur = {cur[0], cur[1] / 2, cur[2] / 2};
        break;
      case LayerKind::kFlatten:
        cur = {shape_size(cur)};
        break;
      case LayerKind::kDense:
        if (cur.size() != 1 || cur[0] != layer.in_features) {
          fail(layer.name + ": dense input size mismatch");
        }
        if (layer.weight.shape() != Shape{layer.out_features, layer.in_features} ||
            layer.bias.shape() != Shape{layer.out_features}) {
          fail(layer.name + ": parameter shapes");
        }
        cur = {layer.out_features};
        break;
    }
    activation_shapes_.push_back(cur);
  }
  if (target_layer_) activation_index(*target_layer_);
}

Capabilities MicroCnn::capabilities() const {
  return {Capability::kPredict, Capability::kInputGrad,
          Capability::kLayerIntrospect, Capability::kGuided,
          Capability::kExcitation};
}

std::optional<std::string> MicroCnn::target_layer() const {
  if (target_layer_) return target_layer_;
  // Rectified output of the last convolution.
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (layers_[i].kind != LayerKind::kConv) continue;
    if (i + 1 < layers_.size() && layers_[i + 1].kind == LayerKind::kRelu) {
      return layers_[i + 1].name;
    }
    return layers_[i].name;
  }
  return std::nullopt;
}

void MicroCnn::set_target_layer(std::string name) {
  activation_index(name);
  target_layer_ = std::move(name);
}

std::vector<std::string> MicroCnn::layer_names() const {
  std::vector<std::string> out;
  out.reserve(layers_.size());
  for (const Layer& l : layers_) out.push_back(l.name);
  return out;
}

std::size_t MicroCnn::activation_index(const std::string& layer_name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].name == layer_name) return i + 1;
  }
  throw Error(ErrorCode::kUnknownLayer, "no layer named '" + layer_name + "'");
}

LayerTrace MicroCnn::forward(const Tensor& image) const {
  check_input(image);
  const auto& k = simd::kernels();
  LayerTrace trace;
  trace.activations.reserve(layers_.size() + 1);
  trace.activations.push_back(image);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    const Tensor& in = trace.activations.back();
    Tensor out(activation_shapes_[i + 1]);
    switch (layer.kind) {
      case LayerKind::kConv:
        conv_forward(layer, conv_geometry(layer, in.shape()), in, out);
        break;
      case LayerKind::kRelu:
        k.relu(in.data(), out.data(), in.size());
        break;
      case LayerKind::kMaxPool:
        maxpool_forward(in, out);
        break;
      case LayerKind::kFlatten:
        std::copy(in.values().begin(), in.values().end(), out.values().begin());
        break;
      case LayerKind::kDense: {
        const std::size_t n = layer.in_features;
        for (std::size_t o = 0; o < layer.out_features; ++o) {
          out[o] = layer.bias[o] + k.dot(layer.weight.data() + o * n, in.data(), n);
        }
        break;
      }
    }
    trace.activations.push_back(std::move(out));
  }
  return trace;
}

std::vector<float> MicroCnn::logits(const Tensor& image) const {
  LayerTrace trace = forward(image);
  return trace.activations.back().vector();
}

std::vector<float> MicroCnn::predict(const Tensor& image) const {
  return softmax(logits(image));
}

void MicroCnn::backward(LayerTrace& trace, std::span<const float> logit_grad,
                        BackwardRule rule, std::size_t stop) const {
  const std::size_t L = layers_.size();
  if (logit_grad.size() != num_classes_ || trace.activations.size() != L + 1 ||
      stop > L) {
    throw Error(ErrorCode::kShapeMismatch, "backward: trace/seed mismatch");
  }
  const auto& k = simd::kernels();
  trace.signals.assign(L + 1, Tensor());
  trace.signals[L] =
      Tensor({num_classes_}, std::vector<float>(logit_grad.begin(), logit_grad.end()));
  for (std::size_t i = L; i-- > stop;) {
    const Layer& layer = layers_[i];
    const Tensor& in = trace.activations[i];
    const Tensor& out_grad = trace.signals[i + 1];
    Tensor in_grad(in.shape());
    switch (layer.kind) {
      case LayerKind::kConv:
        conv_backward_input(layer, conv_geometry(layer, in.shape()), out_grad,
                            in_grad);
        break;
      case LayerKind::kRelu:
        for (std::size_t j = 0; j < in.size(); ++j) {
          const bool pass = in[j] > 0.0f &&
                            (rule == BackwardRule::kGradient || out_grad[j] > 0.0f);
          in_grad[j] = pass ? out_grad[j] : 0.0f;
        }
        break;
      case LayerKind::kMaxPool:
        maxpool_route(in, out_grad, in_grad);
        break;
      case LayerKind::kFlatten:
        std::copy(out_grad.values().begin(), out_grad.values().end(),
                  in_grad.values().begin());
        break;
      case LayerKind::kDense: {
        const std::size_t n = layer.in_features;
        for (std::size_t o = 0; o < layer.out_features; ++o) {
          if (out_grad[o] != 0.0f) {
            k.axpy(out_grad[o], layer.weight.data() + o * n, in_grad.data(), n);
          }
        }
        break;
      }
    }
    trace.signals[i] = std::move(in_grad);
  }
}

ParamGradients MicroCnn::zero_param_gradients() const {
  ParamGradients g;
  for (const Layer& l : layers_) {
    g.weight.emplace_back(l.has_params() ? Tensor(l.weight.shape()) : Tensor());
    g.bias.emplace_back(l.has_params() ? Tensor(l.bias.shape()) : Tensor());
  }
  return g;
}

void MicroCnn::accumulate_param_gradients(const LayerTrace& trace,
                                          std::span<const float> logit_grad,
                                          ParamGradients& grads) const {
  LayerTrace local{trace.activations, {}};
  backward(local, logit_grad, BackwardRule::kGradient, 0);
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    if (!layer.has_params()) continue;
    const Tensor& in = local.activations[i];
    const Tensor& out_grad = local.signals[i + 1];
    Tensor& dw = grads.weight[i];
    Tensor& db = grads.bias[i];
    if (layer.kind == LayerKind::kDense) {
      const std::size_t n = layer.in_features;
      for (std::size_t o = 0; o < layer.out_features; ++o) {
        if (out_grad[o] == 0.0f) continue;
        k.axpy(out_grad[o], in.data(), dw.data() + o * n, n);
        db[o] += out_grad[o];
      }
    } else {
      const ConvGeometry g = conv_geometry(layer, in.shape());
      const std::size_t Q = g.rows(), P = g.cols();
      std::vector<float> col(Q * P);
      im2col(in.data(), g, col.data());
      for (std::size_t o = 0; o < g.cout; ++o) {
        const float* go = out_grad.data() + o * P;
        for (std::size_t q = 0; q < Q; ++q) {
          dw[o * Q + q] += k.dot(go, col.data() + q * P, P);
        }
        double s = 0.0;
        for (std::size_t p = 0; p < P; ++p) s += go[p];
        db[o] += static_cast<float>(s);
      }
    }
  }
}

Tensor MicroCnn::input_gradient(const Tensor& image, std::size_t class_index,
                                ScoreKind score) const {
  check_class(class_index);
  LayerTrace trace = forward(image);
  std::vector<float> seed(num_classes_, 0.0f);
  if (score == ScoreKind::kLogit) {
    seed[class_index] = 1.0f;
  } else {
    const std::vector<float> p = softmax(trace.logits());
    for (std::size_t j = 0; j < num_classes_; ++j) {
      seed[j] = p[class_index] * ((j == class_index ? 1.0f : 0.0f) - p[j]);
    }
  }
  backward(trace, seed, BackwardRule::kGradient, 0);
  return std::move(trace.signals[0]);
}

LayerGradients MicroCnn::layer_activations_and_gradients(
    const Tensor& image, std::size_t class_index,
    const std::string& layer_name) const {
  check_class(class_index);
  const std::size_t idx = activation_index(layer_name);
  LayerTrace trace = forward(image);
  std::vector<float> seed(num_classes_, 0.0f);
  seed[class_index] = 1.0f;
  backward(trace, seed, BackwardRule::kGradient, idx);
  return {std::move(trace.activations[idx]), std::move(trace.signals[idx])};
}

Tensor MicroCnn::guided_backward(const Tensor& image,
                                 std::size_t class_index) const {
  check_class(class_index);
  LayerTrace trace = forward(image);
  std::vector<float> seed(num_classes_, 0.0f);
  seed[class_index] = 1.0f;
  backward(trace, seed, BackwardRule::kGuided, 0);
  return std::move(trace.signals[0]);
}

std::vector<Tensor> MicroCnn::excitation_signals(const LayerTrace& trace,
                                                 std::size_t class_index,
                                                 std::size_t stop,
                                                 bool dual) const {
  check_class(class_index);
  const std::size_t L = layers_.size();
  if (trace.activations.size() != L + 1 || stop > L) {
    throw Error(ErrorCode::kShapeMismatch, "excitation: trace mismatch");
  }
  std::uint64_t degenerate = 0;
  std::vector<Tensor> signals(L + 1);
  signals[L] = Tensor({num_classes_});
  signals[L][class_index] = 1.0f;

  // Winning probabilities are accumulated in double; each unit's outgoing
  // mass is exactly its incoming mass before the final cast.
  for (std::size_t i = L; i-- > stop;) {
    const Layer& layer = layers_[i];
    const Tensor& a = trace.activations[i];
    const Tensor& p_out = signals[i + 1];
    Tensor p_in(a.shape());
    // The dual unit only exists at the output layer.
    const double sign = (dual && i == L - 1) ? -1.0 : 1.0;
    switch (layer.kind) {
      case LayerKind::kDense: {
        const std::size_t n = layer.in_features;
        std::vector<double> acc(n, 0.0);
        for (std::size_t o = 0; o < layer.out_features; ++o) {
          if (p_out[o] == 0.0f) continue;
          const float* w = layer.weight.data() + o * n;
          double z = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double wj = sign * w[j];
            if (wj >= 0.0) z += a[j] * wj;
          }
          if (!(z > 0.0)) {
            ++degenerate;
            continue;
          }
          const double scale = p_out[o] / z;
          for (std::size_t j = 0; j < n; ++j) {
            const double wj = sign * w[j];
            if (wj >= 0.0) acc[j] += a[j] * wj * scale;
          }
        }
        for (std::size_t j = 0; j < n; ++j) p_in[j] = static_cast<float>(acc[j]);
        break;
      }
      case LayerKind::kConv: {
        const ConvGeometry g = conv_geometry(layer, a.shape());
        std::vector<double> acc(a.size(), 0.0);
        for (std::size_t o = 0; o < g.cout; ++o) {
          const float* w = layer.weight.data() + o * g.rows();
          for (std::size_t oy = 0; oy < g.ho; ++oy) {
            for (std::size_t ox = 0; ox < g.wo; ++ox) {
              const float p = p_out(o, oy, ox);
              if (p == 0.0f) continue;
              // Two passes over the receptive field: normalizer, then spread.
              double z = 0.0;
              for (int pass = 0; pass < 2; ++pass) {
                const double scale = pass == 0 ? 0.0 : p / z;
                for (std::size_t ci = 0; ci < g.cin; ++ci) {
                  for (std::size_t ky = 0; ky < g.k; ++ky) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy + ky) -
                                    static_cast<std::ptrdiff_t>(g.pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
                    for (std::size_t kx = 0; kx < g.k; ++kx) {
                      const auto ix = static_cast<std::ptrdiff_t>(ox + kx) -
                                      static_cast<std::ptrdiff_t>(g.pad);
                      if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
                      const double wj = sign * w[(ci * g.k + ky) * g.k + kx];
                      if (wj < 0.0) continue;
                      const std::size_t j =
                          (ci * g.h + static_cast<std::size_t>(iy)) * g.w +
                          static_cast<std::size_t>(ix);
                      if (pass == 0) {
                        z += a[j] * wj;
                      } else {
                        acc[j] += a[j] * wj * scale;
                      }
                    }
                  }
                }
                if (pass == 0 && !(z > 0.0)) {
                  ++degenerate;
                  break;
                }
              }
            }
          }
        }
        for (std::size_t j = 0; j < a.size(); ++j) p_in[j] = static_cast<float>(acc[j]);
        break;
      }
      case LayerKind::kRelu:
      case LayerKind::kFlatten:
        std::copy(p_out.values().begin(), p_out.values().end(),
                  p_in.values().begin());
        break;
      case LayerKind::kMaxPool:
        maxpool_route(a, p_out, p_in);
        break;
    }
    signals[i] = std::move(p_in);
  }
  if (degenerate) degenerate_units_.fetch_add(degenerate, std::memory_order_relaxed);
  return signals;
}

Tensor MicroCnn::excitation_propagate(const Tensor& image,
                                      std::size_t class_index,
                                      const std::string& layer_name,
                                      bool contrastive) const {
  check_class(class_index);
  const std::size_t idx = activation_index(layer_name);
  const LayerTrace trace = forward(image);
  Tensor signal = std::move(excitation_signals(trace, class_index, idx, false)[idx]);
  if (contrastive) {
    const Tensor dual = excitation_signals(trace, class_index, idx, true)[idx];
    for (std::size_t j = 0; j < signal.size(); ++j) signal[j] -= dual[j];
  }
  if (signal.rank() != 3) return signal;
  Tensor out({signal.dim(1), signal.dim(2)});
  const std::size_t plane = out.size();
  for (std::size_t c = 0; c < signal.dim(0); ++c) {
    for (std::size_t j = 0; j < plane; ++j) out[j] += signal[c * plane + j];
  }
  return out;
}

}  // namespace sbench
