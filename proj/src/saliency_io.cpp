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

#include <fstream>

#include "json.hpp"
#include "saliencybench/binary_io.hpp"
#include "saliencybench/error.hpp"
#include "saliencybench/image_ops.hpp"
#include "saliencybench/saliency.hpp"

namespace sbench {
namespace {

constexpr std::string_view kMagic = "SBSM0001";
using nlohmann::json;

}  // namespace

void write_saliency_map(const std::filesystem::path& path,
                        const SaliencyMap& map) {
  if (map.scores.rank() != 2) {
    throw Error(ErrorCode::kShapeMismatch, "saliency map must be [h,w]");
  }
  const json header = {{"h", map.height()},
                       {"w", map.width()},
                       {"method", map.method},
                       {"class", map.class_index},
                       {"normalization", normalization_name(map.normalization)},
                       {"model_id", map.model_id}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  binary_io::write_header(out, kMagic, header.dump());
  binary_io::write_floats(out, map.scores.values());
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

SaliencyMap read_saliency_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  SaliencyMap map;
  std::size_t h = 0, w = 0;
  try {
    const json header = json::parse(binary_io::read_header(in, kMagic));
    h = header.at("h").get<std::size_t>();
    w = header.at("w").get<std::size_t>();
    map.method = header.at("method").get<std::string>();
    map.class_index = header.at("class").get<std::size_t>();
    const std::string norm = header.at("normalization").get<std::string>();
    if (norm == "raw") {
      map.normalization = Normalization::kRaw;
    } else if (norm == "minmax") {
      map.normalization = Normalization::kMinMax;
    } else {
      throw Error(ErrorCode::kFormat, "unknown normalization " + norm);
    }
    map.model_id = header.at("model_id").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  if (h == 0 || w == 0 || h > (1u << 15) || w > (1u << 15)) {
    throw Error(ErrorCode::kFormat, "implausible map size in " + path.string());
  }
  map.scores = Tensor({h, w});
  binary_io::read_floats(in, map.scores.values());
  if (!map.scores.all_finite()) {
    throw Error(ErrorCode::kFormat, "non-finite scores in " + path.string());
  }
  return map;
}

void write_saliency_pgm(const std::filesystem::path& path,
                        const SaliencyMap& map) {
  write_pgm(path, minmax_normalize(map.scores));
}

}  // namespace sbench
