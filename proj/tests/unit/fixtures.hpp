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

#ifndef SALIENCYBENCH_TESTS_FIXTURES_HPP_
#define SALIENCYBENCH_TESTS_FIXTURES_HPP_

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "saliencybench/error.hpp"
#include "saliencybench/micro_cnn.hpp"
#include "saliencybench/rng.hpp"
#include "saliencybench/tensor.hpp"

namespace sbench::testing {

inline Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo = 0.0,
                            double hi = 1.0) {
  Tensor t(shape);
  Rng rng(seed);
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

inline Tensor plane(std::size_t h, std::size_t w, std::vector<float> v) {
  return Tensor({h, w}, std::move(v));
}

// conv(3->4)-relu-pool-conv(4->8)-relu-pool-flatten-dense(16)-relu-dense(C)
inline MicroCnn small_cnn(std::uint64_t seed, std::size_t side = 16,
                          std::size_t classes = 3) {
  ArchitectureSpec spec;
  spec.input_shape = {3, side, side};
  spec.num_classes = classes;
  spec.conv_channels = {4, 8};
  spec.hidden_units = 16;
  MicroCnn m = MicroCnn::reference(spec, seed);
  // Small nonzero biases so no unit sits exactly at a kink by symmetry.
  Rng rng(derive_seed(seed, 99));
  for (Layer& l : m.mutable_layers()) {
    if (!l.has_params()) continue;
    for (float& b : l.bias.values()) b = static_cast<float>(rng.uniform(-0.05, 0.05));
  }
  return m;
}

// flatten - dense(C): y = W flatten(I) + b.
inline MicroCnn linear_model(const Shape& input, const Tensor& weight) {
  std::size_t n = shape_size(input);
  std::size_t classes = weight.dim(0);
  Layer d = Layer::dense("dense", n, classes);
  d.weight = weight;
  return MicroCnn(input, classes, {Layer::flatten("flatten"), d});
}

// Fresh scratch directory under the system temp directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("sbench-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace sbench::testing

#endif  // SALIENCYBENCH_TESTS_FIXTURES_HPP_
