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

#include "saliencybench/model.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "saliencybench/error.hpp"

namespace sbench {
namespace {

constexpr Capability kAllCapabilities[] = {
    Capability::kPredict, Capability::kInputGrad, Capability::kLayerIntrospect,
    Capability::kGuided, Capability::kExcitation};

}  // namespace

const char* capability_name(Capability cap) {
  switch (cap) {
    case Capability::kPredict: return "PREDICT";
    case Capability::kInputGrad: return "INPUT_GRAD";
    case Capability::kLayerIntrospect: return "LAYER_INTROSPECT";
    case Capability::kGuided: return "GUIDED";
    case Capability::kExcitation: return "EXCITATION";
  }
  return "UNKNOWN";
}

std::optional<Capability> capability_from_name(const std::string& name) {
  for (Capability c : kAllCapabilities) {
    if (name == capability_name(c)) return c;
  }
  return std::nullopt;
}

std::vector<std::string> Capabilities::names() const {
  std::vector<std::string> out;
  for (Capability c : kAllCapabilities) {
    if (has(c)) out.emplace_back(capability_name(c));
  }
  return out;
}

Tensor Model::input_gradient(const Tensor&, std::size_t, ScoreKind) const {
  require(Capability::kInputGrad);
  throw Error(ErrorCode::kCapabilityMissing, "input_gradient not implemented");
}

LayerGradients Model::layer_activations_and_gradients(const Tensor&,
                                                      std::size_t,
                                                      const std::string&) const {
  require(Capability::kLayerIntrospect);
  throw Error(ErrorCode::kCapabilityMissing,
              "layer_activations_and_gradients not implemented");
}

Tensor Model::guided_backward(const Tensor&, std::size_t) const {
  require(Capability::kGuided);
  throw Error(ErrorCode::kCapabilityMissing, "guided_backward not implemented");
}

Tensor Model::excitation_propagate(const Tensor&, std::size_t,
                                   const std::string&, bool) const {
  require(Capability::kExcitation);
  throw Error(ErrorCode::kCapabilityMissing,
              "excitation_propagate not implemented");
}

void Model::check_input(const Tensor& image) const {
  if (image.shape() != input_shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                "model " + model_id() + " expects " +
                    shape_to_string(input_shape()) + ", got " +
                    shape_to_string(image.shape()));
  }
}

void Model::check_class(std::size_t class_index) const {
  if (class_index >= num_classes()) {
    throw Error(ErrorCode::kClassOutOfRange,
                "class " + std::to_string(class_index) + " not in [0," +
                    std::to_string(num_classes()) + ")");
  }
}

void Model::require(Capability cap) const {
  if (!capabilities().has(cap)) {
    throw Error(ErrorCode::kCapabilityMissing,
                "model " + model_id() + " lacks " + capability_name(cap));
  }
}

FunctionModel::FunctionModel(std::string id, Shape input_shape,
                             std::size_t num_classes, Fn fn)
    : id_(std::move(id)),
      input_shape_(std::move(input_shape)),
      num_classes_(num_classes),
      fn_(std::move(fn)) {}

std::vector<float> FunctionModel::predict(const Tensor& image) const {
  check_input(image);
  std::vector<float> out = fn_(image);
  if (out.size() != num_classes_) {
    throw Error(ErrorCode::kShapeMismatch,
                "function model returned the wrong number of classes");
  }
  return out;
}

std::vector<float> softmax(std::span<const float> logits) {
  std::vector<float> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  std::vector<double> e(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i]) - top);
    total += e[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = static_cast<float>(e[i] / total);
  }
  return out;
}

std::size_t argmax(std::span<const float> values) {
  return static_cast<std::size_t>(
      std::max_element(values.begin(), values.end()) - values.begin());
}

std::size_t argmin(std::span<const float> values) {
  return static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
}

}  // namespace sbench
