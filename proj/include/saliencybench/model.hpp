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

#ifndef SALIENCYBENCH_MODEL_HPP_
#define SALIENCYBENCH_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saliencybench/tensor.hpp"

namespace sbench {

enum class Capability : std::uint8_t {
  kPredict = 1u << 0,
  kInputGrad = 1u << 1,
  kLayerIntrospect = 1u << 2,
  kGuided = 1u << 3,
  kExcitation = 1u << 4,
};

const char* capability_name(Capability cap);
// Inverse of capability_name; nullopt for unknown names.
std::optional<Capability> capability_from_name(const std::string& name);

class Capabilities {
 public:
  constexpr Capabilities() = default;
  constexpr Capabilities(std::initializer_list<Capability> caps) {
    for (Capability c : caps) bits_ |= static_cast<std::uint8_t>(c);
  }

  constexpr bool has(Capability c) const {
    return (bits_ & static_cast<std::uint8_t>(c)) != 0;
  }
  constexpr void insert(Capability c) { bits_ |= static_cast<std::uint8_t>(c); }

  // PREDICT present; GUIDED and EXCITATION imply LAYER_INTROSPECT.
  constexpr bool valid() const {
    if (!has(Capability::kPredict)) return false;
    if ((has(Capability::kGuided) || has(Capability::kExcitation)) &&
        !has(Capability::kLayerIntrospect)) {
      return false;
    }
    return true;
  }

  std::vector<std::string> names() const;

  friend constexpr bool operator==(Capabilities, Capabilities) = default;

 private:
  std::uint8_t bits_ = 0;
};

// Which class score a gradient is taken of.
enum class ScoreKind { kLogit, kProbability };

struct LayerGradients {
  Tensor activations;  // A^k, the layer's output
  Tensor gradients;    // d y^c / d A^k, same shape
};

// A classifier f: R^{ch x h x w} -> R^C together with the introspection it
// supports. Implementations must be safe to call concurrently once built.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::size_t num_classes() const = 0;
  // Expected input shape, [ch, h, w].
  virtual const Shape& input_shape() const = 0;
  virtual Capabilities capabilities() const = 0;
  virtual std::string model_id() const = 0;

  // Default layer for Grad-CAM / excitation maps, when the model has one.
  virtual std::optional<std::string> target_layer() const {
    return std::nullopt;
  }
  virtual std::vector<std::string> layer_names() const { return {}; }

  // Softmax probabilities, length C.
  virtual std::vector<float> predict(const Tensor& image) const = 0;

  // Gradient of class score c w.r.t. the input pixels, shape [ch, h, w].
  virtual Tensor input_gradient(const Tensor& image, std::size_t class_index,
                                ScoreKind score = ScoreKind::kLogit) const;

  // A^k and d y^c / d A^k for the named layer; y^c is the pre-softmax logit.
  virtual LayerGradients layer_activations_and_gradients(
      const Tensor& image, std::size_t class_index,
      const std::string& layer_name) const;

  // Guided backpropagation signal at the input, shape [ch, h, w].
  virtual Tensor guided_backward(const Tensor& image,
                                 std::size_t class_index) const;

  // Excitation (marginal winning probability) at layer_name summed over
  // channels. With contrastive set, the map of the dual output unit is
  // subtracted.
  virtual Tensor excitation_propagate(const Tensor& image,
                                      std::size_t class_index,
                                      const std::string& layer_name,
                                      bool contrastive) const;

 protected:
  void check_input(const Tensor& image) const;
  void check_class(std::size_t class_index) const;
  void require(Capability cap) const;
};

// Wraps a plain function as a PREDICT-only model. The function must return
// C probabilities.
class FunctionModel final : public Model {
 public:
  using Fn = std::function<std::vector<float>(const Tensor&)>;

  FunctionModel(std::string id, Shape input_shape, std::size_t num_classes,
                Fn fn);

  std::size_t num_classes() const override { return num_classes_; }
  const Shape& input_shape() const override { return input_shape_; }
  Capabilities capabilities() const override {
    return {Capability::kPredict};
  }
  std::string model_id() const override { return id_; }
  std::vector<float> predict(const Tensor& image) const override;

 private:
  std::string id_;
  Shape input_shape_;
  std::size_t num_classes_;
  Fn fn_;
};

// Numerically stable softmax.
std::vector<float> softmax(std::span<const float> logits);

// First index of the max / min (lowest index wins ties).
std::size_t argmax(std::span<const float> values);
std::size_t argmin(std::span<const float> values);

}  // namespace sbench

#endif  // SALIENCYBENCH_MODEL_HPP_
