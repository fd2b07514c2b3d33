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

#ifndef SALIENCYBENCH_IMAGE_OPS_HPP_
#define SALIENCYBENCH_IMAGE_OPS_HPP_

#include <cstddef>
#include <filesystem>

#include "saliencybench/tensor.hpp"

namespace sbench {

// Bilinear resize of a [h, w] plane with half-pixel centres and clamped
// borders (the cv2.resize / align_corners=false convention).
Tensor bilinear_resize(const Tensor& plane, std::size_t out_h,
                       std::size_t out_w);

// Separable Gaussian blur of a [ch, h, w] tensor, reflect-101 borders.
// kernel_size must be odd.
Tensor gaussian_blur(const Tensor& image, std::size_t kernel_size,
                     double sigma);

// Blur used as the insertion reference: an 11x11, sigma 5 kernel at 64x64,
// scaled with the image side.
Tensor insertion_reference_blur(const Tensor& image);

// (x - min) / (max - min). A constant plane maps to all zeros.
Tensor minmax_normalize(const Tensor& plane);

// [ch, h, w] -> [h, w], max of |value| across channels.
Tensor channel_max_abs(const Tensor& image);

// [ch, h, w] -> [h, w], sum across channels.
Tensor channel_sum(const Tensor& image);

// Binary PNM I/O. Values are quantized to 8 bit (round to nearest) on write
// and mapped back to k/255 on read.
void write_ppm(const std::filesystem::path& path, const Tensor& image);
void write_pgm(const std::filesystem::path& path, const Tensor& plane);
Tensor read_pnm(const std::filesystem::path& path);

// Rounds every value to the nearest k/255, matching what a PNM round trip
// stores.
void quantize_8bit(Tensor& tensor);

}  // namespace sbench

#endif  // SALIENCYBENCH_IMAGE_OPS_HPP_
