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

#include "saliencybench/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "saliencybench/error.hpp"

namespace sbench {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, float fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "shape " + shape_to_string(shape_) + " holds " +
                    std::to_string(shape_size(shape_)) + " values, got " +
                    std::to_string(data_.size()));
  }
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

Image::Image(Tensor tensor) : tensor_(std::move(tensor)) {
  if (tensor_.rank() != 3) {
    throw Error(ErrorCode::kShapeMismatch,
                "image must be [ch,h,w], got " +
                    shape_to_string(tensor_.shape()));
  }
  if (channels() != 1 && channels() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "image channels must be 1 or 3");
  }
  if (height() < kMinSide || width() < kMinSide) {
    throw Error(ErrorCode::kShapeMismatch, "image sides must be >= 8");
  }
  for (float v : tensor_.values()) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw Error(ErrorCode::kInvalidArgument,
                  "image pixels must be finite and in [0,1]");
    }
  }
}

}  // namespace sbench
