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

#ifndef SALIENCYBENCH_TENSOR_HPP_
#define SALIENCYBENCH_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sbench {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major float32 array. Images are [ch, h, w], saliency maps
// [h, w]; layers use whatever rank they need.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  // Throws kShapeMismatch when product(shape) != data.size().
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }
  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  const std::vector<float>& vector() const noexcept { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // Rank-2 and rank-3 element access. No bounds checks beyond the vector's.
  float& operator()(std::size_t i, std::size_t j) {
    return data_[i * shape_[1] + j];
  }
  float operator()(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  float& operator()(std::size_t c, std::size_t i, std::size_t j) {
    return data_[(c * shape_[1] + i) * shape_[2] + j];
  }
  float operator()(std::size_t c, std::size_t i, std::size_t j) const {
    return data_[(c * shape_[1] + i) * shape_[2] + j];
  }

  bool all_finite() const noexcept;
  void fill(float value);

  // Same data, new shape of equal element count.
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<float> data_;
};

// A validated classifier input: shape [ch, h, w] with ch in {1, 3},
// h, w >= 8, every pixel finite and inside [0, 1].
class Image {
 public:
  static constexpr std::size_t kMinSide = 8;

  // Throws kShapeMismatch or kInvalidArgument.
  explicit Image(Tensor tensor);

  const Tensor& tensor() const noexcept { return tensor_; }
  std::size_t channels() const noexcept { return tensor_.dim(0); }
  std::size_t height() const noexcept { return tensor_.dim(1); }
  std::size_t width() const noexcept { return tensor_.dim(2); }

  operator const Tensor&() const noexcept { return tensor_; }  // NOLINT

 private:
  Tensor tensor_;
};

}  // namespace sbench

#endif  // SALIENCYBENCH_TENSOR_HPP_
