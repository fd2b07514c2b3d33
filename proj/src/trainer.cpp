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

#include "saliencybench/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "saliencybench/error.hpp"
#include "saliencybench/rng.hpp"
#include "saliencybench/simd/kernels.hpp"

namespace sbench {

TrainResult train_micro_cnn(
    const std::vector<Tensor>& images, const std::vector<std::size_t>& labels,
    const ArchitectureSpec& arch, const TrainOptions& options,
    const std::function<void(std::size_t, double)>& on_epoch) {
  if (images.empty() || images.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "training needs a nonempty dataset with one label per image");
  }
  for (std::size_t label : labels) {
    if (label >= arch.num_classes) {
      throw Error(ErrorCode::kInvalidArgument, "label out of range");
    }
  }
  if (options.batch_size == 0 || !(options.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "batch size and learning rate must be positive");
  }

  MicroCnn model = MicroCnn::reference(arch, options.seed);
  Rng shuffle_rng(derive_seed(options.seed, 0x5EED));
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& k = simd::kernels();

  TrainResult result{model, 0.0, {}};
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    // Fisher-Yates with the portable index draw.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.index(i)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      ParamGradients grads = model.zero_param_gradients();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        const LayerTrace trace = model.forward(images[idx]);
        std::vector<float> p = softmax(trace.logits());
        const double loss = -std::log(std::max(1e-12, static_cast<double>(p[labels[idx]])));
        if (!std::isfinite(loss) || !trace.activations.back().all_finite()) {
          throw Error(ErrorCode::kDiverged,
                      "loss became non-finite in epoch " + std::to_string(epoch));
        }
        loss_sum += loss;
        p[labels[idx]] -= 1.0f;  // d loss / d logits
        model.accumulate_param_gradients(trace, p, grads);
      }
      const float step = -static_cast<float>(options.learning_rate /
                                             static_cast<double>(end - start));
      auto& layers = model.mutable_layers();
      for (std::size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].has_params()) continue;
        k.axpy(step, grads.weight[i].data(), layers[i].weight.data(),
               layers[i].weight.size());
        k.axpy(step, grads.bias[i].data(), layers[i].bias.data(),
               layers[i].bias.size());
        if (!layers[i].weight.all_finite() || !layers[i].bias.all_finite()) {
          throw Error(ErrorCode::kDiverged, "weights became non-finite");
        }
      }
    }
    const double mean_loss = loss_sum / static_cast<double>(images.size());
    result.epoch_losses.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch, mean_loss);
  }
  result.model = std::move(model);
  result.train_accuracy = classification_accuracy(result.model, images, labels);
  return result;
}

double classification_accuracy(const Model& model,
                               const std::vector<Tensor>& images,
                               const std::vector<std::size_t>& labels) {
  if (images.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (argmax(model.predict(images[i])) == labels.at(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(images.size());
}

}  // namespace sbench
