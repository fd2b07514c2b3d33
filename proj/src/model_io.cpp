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

// SBMC0001 model container:
//   "SBMC0001" | u64 LE header length | JSON header | float32 LE blobs
// The header lists the architecture, seed and, per parameter tensor, its
// shape and byte offset relative to the first blob. Blobs follow in layer
// declaration order, weight before bias.

#include <fstream>

#include "json.hpp"
#include "saliencybench/binary_io.hpp"
#include "saliencybench/error.hpp"
#include "saliencybench/micro_cnn.hpp"

namespace sbench {
namespace {

constexpr std::string_view kMagic = "SBMC0001";
using nlohmann::json;

json param_entry(const char* name, const Tensor& t, std::uint64_t& offset) {
  json e = {{"name", name},
            {"shape", t.shape()},
            {"offset", offset},
            {"count", t.size()}};
  offset += 4 * t.size();
  return e;
}

}  // namespace

void MicroCnn::save(const std::filesystem::path& path) const {
  json header;
  header["format"] = std::string(kMagic);
  header["model_id"] = model_id_;
  header["seed"] = seed_;
  header["input_shape"] = input_shape_;
  header["num_classes"] = num_classes_;
  if (target_layer_) header["target_layer"] = *target_layer_;
  std::uint64_t offset = 0;
  json layers = json::array();
  for (const Layer& l : layers_) {
    json e = {{"name", l.name}, {"type", layer_kind_name(l.kind)}};
    if (l.kind == LayerKind::kConv) {
      e["in_channels"] = l.in_channels;
      e["out_channels"] = l.out_channels;
      e["kernel"] = l.kernel;
      e["padding"] = l.padding;
    } else if (l.kind == LayerKind::kDense) {
      e["in_features"] = l.in_features;
      e["out_features"] = l.out_features;
    }
    if (l.has_params()) {
      e["params"] = json::array({param_entry("weight", l.weight, offset),
                                 param_entry("bias", l.bias, offset)});
    }
    layers.push_back(std::move(e));
  }
  header["layers"] = std::move(layers);
  header["blob_bytes"] = offset;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  binary_io::write_header(out, kMagic, header.dump());
  for (const Layer& l : layers_) {
    if (!l.has_params()) continue;
    binary_io::write_floats(out, l.weight.values());
    binary_io::write_floats(out, l.bias.values());
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

MicroCnn MicroCnn::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  const std::string text = binary_io::read_header(in, kMagic);
  const std::streamoff blob_start = in.tellg();
  try {
    const json header = json::parse(text);
    std::vector<Layer> layers;
    for (const json& e : header.at("layers")) {
      const auto kind = layer_kind_from_name(e.at("type").get<std::string>());
      if (!kind) throw Error(ErrorCode::kFormat, "unknown layer type");
      const std::string name = e.at("name").get<std::string>();
      Layer l;
      switch (*kind) {
        case LayerKind::kConv:
          l = Layer::conv(name, e.at("in_channels"), e.at("out_channels"),
                          e.at("kernel"), e.at("padding"));
          break;
        case LayerKind::kDense:
          l = Layer::dense(name, e.at("in_features"), e.at("out_features"));
          break;
        case LayerKind::kRelu: l = Layer::relu(name); break;
        case LayerKind::kMaxPool: l = Layer::max_pool(name); break;
        case LayerKind::kFlatten: l = Layer::flatten(name); break;
      }
      if (l.has_params()) {
        for (const json& p : e.at("params")) {
          Tensor& t = p.at("name") == "weight" ? l.weight : l.bias;
          if (p.at("shape").get<Shape>() != t.shape()) {
            throw Error(ErrorCode::kFormat, name + ": parameter shape mismatch");
          }
          in.seekg(blob_start + static_cast<std::streamoff>(
                                    p.at("offset").get<std::uint64_t>()));
          binary_io::read_floats(in, t.values());
          if (!t.all_finite()) {
            throw Error(ErrorCode::kFormat, name + ": non-finite weights");
          }
        }
      }
      layers.push_back(std::move(l));
    }
    MicroCnn model(header.at("input_shape").get<Shape>(),
                   header.at("num_classes").get<std::size_t>(), std::move(layers),
                   header.at("seed").get<std::uint64_t>());
    model.set_model_id(header.value("model_id", std::string("micro_cnn")));
    if (header.contains("target_layer")) {
      model.set_target_layer(header.at("target_layer").get<std::string>());
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

}  // namespace sbench
