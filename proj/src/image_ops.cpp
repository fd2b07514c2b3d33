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

#include "saliencybench/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "saliencybench/error.hpp"
#include "saliencybench/simd/kernels.hpp"

namespace sbench {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + " expects rank " + std::to_string(rank) +
                    ", got " + shape_to_string(t.shape()));
  }
}

std::size_t reflect101(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  while (i < 0 || i > last) {
    if (i < 0) i = -i;
    if (i > last) i = 2 * last - i;
  }
  return static_cast<std::size_t>(i);
}

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

Tensor bilinear_resize(const Tensor& plane, std::size_t out_h,
                       std::size_t out_w) {
  require_rank(plane, 2, "bilinear_resize");
  const std::size_t in_h = plane.dim(0);
  const std::size_t in_w = plane.dim(1);
  if (in_h == 0 || in_w == 0 || out_h == 0 || out_w == 0) {
    throw Error(ErrorCode::kInvalidArgument, "bilinear_resize: empty plane");
  }
  auto source_coord = [](std::size_t dst, std::size_t in, std::size_t out,
                         std::size_t& i0, std::size_t& i1, double& frac) {
    double src = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) /
                     static_cast<double>(out) -
                 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    i0 = static_cast<std::size_t>(std::floor(src));
    i1 = std::min(i0 + 1, in - 1);
    frac = src - static_cast<double>(i0);
  };
  Tensor out({out_h, out_w});
  for (std::size_t y = 0; y < out_h; ++y) {
    std::size_t y0, y1;
    double fy;
    source_coord(y, in_h, out_h, y0, y1, fy);
    for (std::size_t x = 0; x < out_w; ++x) {
      std::size_t x0, x1;
      double fx;
      source_coord(x, in_w, out_w, x0, x1, fx);
      const double top = (1.0 - fx) * plane(y0, x0) + fx * plane(y0, x1);
      const double bottom = (1.0 - fx) * plane(y1, x0) + fx * plane(y1, x1);
      out(y, x) = static_cast<float>((1.0 - fy) * top + fy * bottom);
    }
  }
  return out;
}

Tensor gaussian_blur(const Tensor& image, std::size_t kernel_size,
                     double sigma) {
  require_rank(image, 3, "gaussian_blur");
  if (kernel_size % 2 == 0 || sigma <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "gaussian_blur: odd kernel size and positive sigma required");
  }
  const auto radius = static_cast<std::ptrdiff_t>(kernel_size / 2);
  std::vector<double> weights(kernel_size);
  double total = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    weights[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (double& w : weights) w /= total;

  const std::size_t ch = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor horizontal(image.shape());
  Tensor out(image.shape());
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          acc += weights[static_cast<std::size_t>(k + radius)] *
                 image(c, y, reflect101(static_cast<std::ptrdiff_t>(x) + k, w));
        }
        horizontal(c, y, x) = static_cast<float>(acc);
      }
    }
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          acc += weights[static_cast<std::size_t>(k + radius)] *
                 horizontal(c, reflect101(static_cast<std::ptrdiff_t>(y) + k, h), x);
        }
        out(c, y, x) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Tensor insertion_reference_blur(const Tensor& image) {
  require_rank(image, 3, "insertion_reference_blur");
  const double scale =
      static_cast<double>(std::min(image.dim(1), image.dim(2))) / 64.0;
  auto size = static_cast<std::size_t>(std::lround(11.0 * scale));
  if (size % 2 == 0) ++size;
  size = std::max<std::size_t>(size, 3);
  return gaussian_blur(image, size, 5.0 * scale);
}

Tensor minmax_normalize(const Tensor& plane) {
  Tensor out(plane.shape());
  if (plane.empty()) return out;
  const auto [lo_it, hi_it] =
      std::minmax_element(plane.values().begin(), plane.values().end());
  const double lo = *lo_it;
  const double range = static_cast<double>(*hi_it) - lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < plane.size(); ++i) {
    out[i] = static_cast<float>((plane[i] - lo) / range);
  }
  return out;
}

Tensor channel_max_abs(const Tensor& image) {
  require_rank(image, 3, "channel_max_abs");
  const std::size_t plane = image.dim(1) * image.dim(2);
  Tensor out({image.dim(1), image.dim(2)});
  const auto& k = simd::kernels();
  for (std::size_t c = 0; c < image.dim(0); ++c) {
    k.max_abs_accumulate(image.data() + c * plane, out.data(), plane);
  }
  return out;
}

Tensor channel_sum(const Tensor& image) {
  require_rank(image, 3, "channel_sum");
  const std::size_t plane = image.dim(1) * image.dim(2);
  Tensor out({image.dim(1), image.dim(2)});
  for (std::size_t c = 0; c < image.dim(0); ++c) {
    for (std::size_t i = 0; i < plane; ++i) out[i] += image[c * plane + i];
  }
  return out;
}

void quantize_8bit(Tensor& tensor) {
  for (float& v : tensor.values()) v = static_cast<float>(to_byte(v)) / 255.0f;
}

void write_ppm(const std::filesystem::path& path, const Tensor& image) {
  require_rank(image, 3, "write_ppm");
  const std::size_t ch = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (ch != 3 && ch != 1) {
    throw Error(ErrorCode::kShapeMismatch, "write_ppm: 1 or 3 channels");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  out << "P6\n" << w << " " << h << "\n255\n";
  std::vector<std::uint8_t> row(w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        row[x * 3 + c] = to_byte(image(ch == 3 ? c : 0, y, x));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

void write_pgm(const std::filesystem::path& path, const Tensor& plane) {
  require_rank(plane, 2, "write_pgm");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  out << "P5\n" << plane.dim(1) << " " << plane.dim(0) << "\n255\n";
  std::vector<std::uint8_t> bytes(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) bytes[i] = to_byte(plane[i]);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

Tensor read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string magic;
  in >> magic;
  std::size_t channels = 0;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    throw Error(ErrorCode::kFormat, "not a binary PNM: " + path.string());
  }
  auto next_number = [&in, &path]() {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      in >> std::ws;
    }
    std::size_t v = 0;
    if (!(in >> v)) throw Error(ErrorCode::kFormat, "bad PNM header: " + path.string());
    return v;
  };
  const std::size_t w = next_number();
  const std::size_t h = next_number();
  const std::size_t maxval = next_number();
  if (maxval != 255) {
    throw Error(ErrorCode::kFormat, "only 8-bit PNM supported: " + path.string());
  }
  in.get();  // single whitespace before the raster
  std::vector<std::uint8_t> bytes(w * h * channels);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw Error(ErrorCode::kFormat, "truncated PNM: " + path.string());
  }
  Tensor out({channels, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        out(c, y, x) =
            static_cast<float>(bytes[(y * w + x) * channels + c]) / 255.0f;
      }
    }
  }
  return out;
}

}  // namespace sbench
