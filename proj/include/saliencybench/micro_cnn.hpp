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

#ifndef SALIENCYBENCH_MICRO_CNN_HPP_
#define SALIENCYBENCH_MICRO_CNN_HPP_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saliencybench/model.hpp"
#include "saliencybench/tensor.hpp"

namespace sbench {

enum class LayerKind { kConv, kRelu, kMaxPool, kFlatten, kDense };

const char* layer_kind_name(LayerKind kind);
std::optional<LayerKind> layer_kind_from_name(const std::string& name);

// One layer of the sequential network. Convolutions are stride 1 with
// symmetric zero padding; max pooling is 2x2 stride 2 (floor).
struct Layer {
  LayerKind kind = LayerKind::kRelu;
  std::string name;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t padding = 0;
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  Tensor weight;  // conv [out, in, k, k]; dense [out, in]
  Tensor bias;    // [out]

  bool has_params() const {
    return kind == LayerKind::kConv || kind == LayerKind::kDense;
  }
  static Layer conv(std::string name, std::size_t in, std::size_t out,
                    std::size_t kernel, std::size_t padding);
  static Layer dense(std::string name, std::size_t in, std::size_t out);
  static Layer relu(std::string name);
  static Layer max_pool(std::string name);
  static Layer flatten(std::string name);
};

// Width/depth knobs of the reference family:
// [conv(k3,pad1)-relu-maxpool] x len(conv_channels) - flatten
//   - dense(hidden_units)-relu - dense(C), softmax on top.
// hidden_units == 0 drops the hidden dense block.
struct ArchitectureSpec {
  Shape input_shape{3, 64, 64};
  std::size_t num_classes = 10;
  std::vector<std::size_t> conv_channels{8, 16};
  std::size_t hidden_units = 64;
};

// Per-layer forward activations A^i and backward signals R^i for one pass.
// activations[0] is the input, activations[i + 1] the output of layer i; the
// last entry holds the logits. signals, when filled, mirrors the shapes.
struct LayerTrace {
  std::vector<Tensor> activations;
  std::vector<Tensor> signals;

  std::span<const float> logits() const { return activations.back().values(); }
};

enum class BackwardRule {
  kGradient,  // plain chain rule
  kGuided,    // R_in = (A_in > 0) * (R_out > 0) * R_out at every ReLU
};

// Accumulated parameter gradients, one entry per layer (empty for
// parameter-free layers).
struct ParamGradients {
  std::vector<Tensor> weight;
  std::vector<Tensor> bias;
};

class MicroCnn final : public Model {
 public:
  // Builds the reference family and He-initializes it from seed.
  static MicroCnn reference(const ArchitectureSpec& spec, std::uint64_t seed);

  // Arbitrary stack from the fixed layer vocabulary. Validates that layer
  // shapes chain and that the last layer is a dense layer with num_classes
  // outputs. Parameter tensors are taken as given.
  MicroCnn(Shape input_shape, std::size_t num_classes, std::vector<Layer> layers,
           std::uint64_t seed = 0);

  MicroCnn(const MicroCnn& other);
  MicroCnn& operator=(const MicroCnn& other);
  MicroCnn(MicroCnn&&) noexcept;
  MicroCnn& operator=(MicroCnn&&) noexcept;
  ~MicroCnn() override;

  // Model interface. Every capability is supported.
  std::size_t num_classes() const override { return num_classes_; }
  const Shape& input_shape() const override { return input_shape_; }
  Capabilities capabilities() const override;
  std::string model_id() const override { return model_id_; }
  std::optional<std::string> target_layer() const override;
  std::vector<std::string> layer_names() const override;

  std::vector<float> predict(const Tensor& image) const override;
  Tensor input_gradient(const Tensor& image, std::size_t class_index,
                        ScoreKind score = ScoreKind::kLogit) const override;
  LayerGradients layer_activations_and_gradients(
      const Tensor& image, std::size_t class_index,
      const std::string& layer_name) const override;
  Tensor guided_backward(const Tensor& image,
                         std::size_t class_index) const override;
  Tensor excitation_propagate(const Tensor& image, std::size_t class_index,
                              const std::string& layer_name,
                              bool contrastive) const override;

  // Lower-level access.
  std::vector<float> logits(const Tensor& image) const;
  LayerTrace forward(const Tensor& image) const;
  // Fills trace.signals[stop..end] from d score / d logits = logit_grad.
  void backward(LayerTrace& trace, std::span<const float> logit_grad,
                BackwardRule rule, std::size_t stop = 0) const;
  // Excitation signals at every activation from the top down to stop
  // (inclusive). With dual set, propagation starts at the virtual unit whose
  // input weights are the negation of class_index's.
  std::vector<Tensor> excitation_signals(const LayerTrace& trace,
                                         std::size_t class_index,
                                         std::size_t stop, bool dual) const;
  // Parameter gradients of sum_j logit_grad[j] * logit_j, accumulated.
  void accumulate_param_gradients(const LayerTrace& trace,
                                  std::span<const float> logit_grad,
                                  ParamGradients& grads) const;
  ParamGradients zero_param_gradients() const;

  // Index into LayerTrace::activations of the named layer's output. Throws
  // kUnknownLayer.
  std::size_t activation_index(const std::string& layer_name) const;
  const Shape& activation_shape(std::size_t index) const {
    return activation_shapes_.at(index);
  }

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  std::uint64_t seed() const { return seed_; }

  void set_model_id(std::string id) { model_id_ = std::move(id); }
  void set_target_layer(std::string name);

  // Units skipped during excitation because no nonnegative-weight child
  // carried activation (normalizer undefined). Monotone counter.
  std::uint64_t degenerate_unit_count() const {
    return degenerate_units_.load(std::memory_order_relaxed);
  }

  // SBMC0001 container. See model_io.cpp for the layout.
  void save(const std::filesystem::path& path) const;
  static MicroCnn load(const std::filesystem::path& path);

 private:
  void validate_and_infer_shapes();

  Shape input_shape_;
  std::size_t num_classes_ = 0;
  std::vector<Layer> layers_;
  std::vector<Shape> activation_shapes_;
  std::uint64_t seed_ = 0;
  std::string model_id_ = "micro_cnn";
  std::optional<std::string> target_layer_;
  mutable std::atomic<std::uint64_t> degenerate_units_{0};
};

}  // namespace sbench

#endif  // SALIENCYBENCH_MICRO_CNN_HPP_
