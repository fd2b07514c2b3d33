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

#ifndef SALIENCYBENCH_TRAINER_HPP_
#define SALIENCYBENCH_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "saliencybench/micro_cnn.hpp"
#include "saliencybench/tensor.hpp"

namespace sbench {

struct TrainOptions {
  std::size_t epochs = 10;
  double learning_rate = 0.02;
  std::size_t batch_size = 16;
  // Seeds both the He initialization and the per-epoch shuffles.
  std::uint64_t seed = 1;
};

struct TrainResult {
  MicroCnn model;
  double train_accuracy = 0.0;
  std::vector<double> epoch_losses;  // mean cross-entropy per epoch
};

// Mini-batch SGD on softmax cross-entropy. Deterministic for a fixed seed.
// Throws kInvalidArgument on an empty or mislabeled dataset and kDiverged
// when the loss or the weights stop being finite.
TrainResult train_micro_cnn(
    const std::vector<Tensor>& images, const std::vector<std::size_t>& labels,
    const ArchitectureSpec& arch, const TrainOptions& options,
    const std::function<void(std::size_t epoch, double loss)>& on_epoch = {});

// Fraction of images whose argmax prediction equals the label.
double classification_accuracy(const Model& model,
                               const std::vector<Tensor>& images,
                               const std::vector<std::size_t>& labels);

}  // namespace sbench

#endif  // SALIENCYBENCH_TRAINER_HPP_
