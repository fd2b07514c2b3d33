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

#ifndef SALIENCYBENCH_SYNTHETIC_BAM_HPP_
#define SALIENCYBENCH_SYNTHETIC_BAM_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "saliencybench/metrics.hpp"
#include "saliencybench/tensor.hpp"

namespace sbench {

// Procedural stand-in for a BAM-style dataset: object sprites pasted onto
// scene textures, each with a twin that shows the bare scene.

inline constexpr std::size_t kMaxObjectClasses = 12;
inline constexpr std::size_t kMaxSceneClasses = 16;
inline constexpr std::size_t kMinImageSize = 32;

// Plants a shortcut: every sample labelled `object_class` sits on
// `scene_class` and shows the sprite of `mimic_class`, while the mimic never
// appears on that scene. Telling the two apart requires the scene.
struct SpuriousCorrelation {
  std::size_t object_class = 0;
  std::size_t scene_class = 0;
  std::size_t mimic_class = 1;
};

struct GeneratorConfig {
  std::size_t n_object_classes = 10;
  std::size_t n_scene_classes = 10;
  std::size_t image_size = 64;
  std::size_t samples_per_combined_label = 50;
  std::uint64_t seed = 0;
  std::optional<SpuriousCorrelation> spurious;

  // Throws kConfigInvalid.
  void validate() const;
  std::size_t pair_count() const {
    return n_object_classes * n_scene_classes * samples_per_combined_label;
  }
};

struct Placement {
  std::size_t x = 0;  // column of the sprite's top-left pixel
  std::size_t y = 0;
  double scale = 0.0;  // sprite side / scene side
};

struct SampleRecord {
  Tensor image;  // [3, S, S]; empty when only the manifest was loaded
  std::size_t object_label = 0;
  std::size_t scene_label = 0;
  // Region of the pasted object. The twin carries its partner's mask so the
  // same region can be scored on both.
  std::optional<GroundTruthMask> cf_mask;
  std::size_t pair_id = 0;
  bool has_cf = true;
  Placement placement;
  // Paths relative to the dataset root, filled by the writer/loader.
  std::string image_path;
  std::string mask_path;

  // "p000042-cf" / "p000042-nocf".
  std::string sample_id() const;
};

// Scene texture of class `scene_class`, [3, size, size]. Throws kUnknownClass.
Tensor render_scene(std::size_t scene_class, std::uint64_t seed, std::size_t size);

struct Sprite {
  Tensor rgb;    // [3, side, side], zero outside the alpha support
  Tensor alpha;  // [side, side], 0 or 1
};

// Object sprite at side x side. Throws kUnknownClass.
Sprite render_object(std::size_t object_class, std::uint64_t seed,
                     std::size_t side = 64);

// Nearest-neighbour rescale of a sprite to side x side.
Sprite resize_sprite(const Sprite& sprite, std::size_t side);

struct ComposedPair {
  SampleRecord with_cf;
  SampleRecord without_cf;
};

// Pastes the sprite, rescaled to a side drawn uniformly among the integers
// in [ceil(S/3), floor(S/2)], at a uniform position that keeps it inside the
// scene. Both images are 8-bit quantized. Sprite pixels that would quantize
// to the scene's own colour are nudged by one level so the image and the
// twin differ exactly on the mask. Labels and pair_id are left for the
// caller.
ComposedPair compose(const Tensor& scene, const Sprite& sprite, std::uint64_t seed);

// Object/scene labels of pair `pair_id` under config (after any spurious
// remapping), and the object class whose sprite is drawn.
struct PairLabels {
  std::size_t object_label;
  std::size_t scene_label;
  std::size_t sprite_class;
};
PairLabels pair_labels(const GeneratorConfig& config, std::size_t pair_id);

// Both records of one pair; a pure function of (config, pair_id).
ComposedPair generate_pair(const GeneratorConfig& config, std::size_t pair_id);

// In-memory dataset, with-CF record then twin for each pair_id in order.
std::vector<SampleRecord> generate_records(const GeneratorConfig& config);

// Writes images/<id>.ppm, masks/p<pair>.pgm (shared by the pair),
// manifest.jsonl and config.json under root. Image tensors are dropped from
// the returned records. Output bytes do not depend on `workers`.
std::vector<SampleRecord> generate_dataset(const GeneratorConfig& config,
                                           const std::filesystem::path& root,
                                           std::size_t workers = 1);

// Reads manifest.jsonl. Images and masks are loaded when with_pixels is set.
std::vector<SampleRecord> load_manifest(const std::filesystem::path& root,
                                        bool with_pixels = false);
void load_pixels(const std::filesystem::path& root, SampleRecord& record);

GeneratorConfig generator_config_from_json(const std::string& text);
std::string generator_config_to_json(const GeneratorConfig& config);

}  // namespace sbench

#endif  // SALIENCYBENCH_SYNTHETIC_BAM_HPP_
