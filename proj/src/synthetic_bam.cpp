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

#include "saliencybench/synthetic_bam.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "json.hpp"
#include "saliencybench/error.hpp"
#include "saliencybench/image_ops.hpp"
#include "saliencybench/parallel.hpp"
#include "saliencybench/rng.hpp"

namespace sbench {
namespace {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;

std::array<double, 3> hsv(double h, double s, double v) {
  h = h - std::floor(h);
  const double k = h * 6.0;
  const int i = static_cast<int>(k) % 6;
  const double f = k - std::floor(k);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

// Shape membership in [-1, 1]^2 coordinates (v grows downward).
bool inside_shape(std::size_t cls, double u, double v) {
  const double r = std::hypot(u, v);
  const double au = std::abs(u), av = std::abs(v);
  switch (cls) {
    case 0: return r < 0.9;                                         // disk
    case 1: return au < 0.78 && av < 0.78;                          // square
    case 2: return v < 0.8 && v > -0.9 && au < (v + 0.9) * 0.55;    // triangle
    case 3: return au + av < 0.95;                                  // diamond
    case 4: return (au < 0.3 || av < 0.3) && au < 0.9 && av < 0.9;  // plus
    case 5: return r > 0.5 && r < 0.92;                             // ring
    case 6:                                                         // saltire
      return (std::abs(u - v) < 0.4 || std::abs(u + v) < 0.4) && au < 0.9 && av < 0.9;
    case 7: return r < 0.9 && v > -0.05;                            // half disk
    case 8: {                                                       // star
      const double phi = std::atan2(v, u);
      return r < 0.55 + 0.35 * std::cos(5.0 * phi);
    }
    case 9:                                                         // frame
      return au < 0.88 && av < 0.88 && !(au < 0.45 && av < 0.45);
    case 10: return v > -0.8 && v < 0.9 && au < (0.8 - v) * 0.55;   // triangle down
    case 11: return av < 0.35 && au < 0.92;                         // bar
    default: return false;
  }
}

void check_scene_class(std::size_t c) {
  if (c >= kMaxSceneClasses) {
    throw Error(ErrorCode::kUnknownClass, "scene class " + std::to_string(c) +
                                              " (max " +
                                              std::to_string(kMaxSceneClasses) + ")");
  }
}

std::string pad6(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", v);
  return buf;
}

std::string mask_rel_path(std::size_t pair_id) { return "masks/p" + pad6(pair_id) + ".pgm"; }

json record_to_json(const SampleRecord& r) {
  return {{"image", r.image_path},
          {"object_label", r.object_label},
          {"scene_label", r.scene_label},
          {"cf_mask", r.mask_path},
          {"pair_id", r.pair_id},
          {"has_cf", r.has_cf},
          {"placement", {{"x", r.placement.x}, {"y", r.placement.y},
                         {"scale", r.placement.scale}}}};
}

}  // namespace

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfigInvalid, msg); };
  if (n_object_classes < 1 || n_object_classes > kMaxObjectClasses) {
    fail("n_object_classes must be in [1, " + std::to_string(kMaxObjectClasses) + "]");
  }
  if (n_scene_classes < 1 || n_scene_classes > kMaxSceneClasses) {
    fail("n_scene_classes must be in [1, " + std::to_string(kMaxSceneClasses) + "]");
  }
  if (image_size < kMinImageSize) {
    fail("image_size must be >= " + std::to_string(kMinImageSize));
  }
  if (samples_per_combined_label < 1) fail("samples_per_combined_label must be >= 1");
  if (spurious) {
    const SpuriousCorrelation& s = *spurious;
    if (s.object_class >= n_object_classes || s.mimic_class >= n_object_classes ||
        s.object_class == s.mimic_class) {
      fail("spurious object and mimic must be distinct object classes");
    }
    if (s.scene_class >= n_scene_classes || n_scene_classes < 2) {
      fail("spurious scene must exist and another scene must remain");
    }
  }
}

std::string SampleRecord::sample_id() const {
  return "p" + pad6(pair_id) + (has_cf ? "-cf" : "-nocf");
}

Tensor render_scene(std::size_t scene_class, std::uint64_t seed, std::size_t size) {
  check_scene_class(scene_class);
  // The class fixes only the pattern: stripes at one of four orientations
  // and three frequencies, or a checkerboard. Colours vary per image, so a
  // blurred scene carries almost no class evidence.
  const bool checker = scene_class >= 12;
  const double angle = static_cast<double>(scene_class % 4) * kPi / 4.0;
  const double cycles = checker ? 4.0 + static_cast<double>(scene_class - 12)
                                : 4.0 + 2.0 * static_cast<double>(scene_class / 4);

  Rng rng(seed);
  const double hue = rng.uniform();
  const auto light = hsv(hue, 0.35, 0.9);
  const auto dark = hsv(hue + 0.05, 0.5, 0.3);
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  const double jitter = rng.uniform(-0.08, 0.08);
  const double ca = std::cos(angle + jitter), sa = std::sin(angle + jitter);
  Tensor out({3, size, size});
  const double side = static_cast<double>(size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double fx = static_cast<double>(x) / side, fy = static_cast<double>(y) / side;
      double m;
      if (checker) {
        m = 0.5 + 0.5 * std::sin(2.0 * kPi * cycles * fx + phase) *
                      std::sin(2.0 * kPi * cycles * fy + phase);
      } else {
        m = 0.5 + 0.5 * std::sin(2.0 * kPi * cycles * (fx * ca + fy * sa) + phase);
      }
      for (std::size_t c = 0; c < 3; ++c) {
        const double noise = rng.uniform(-0.04, 0.04);
        out(c, y, x) = clamp01(dark[c] + m * (light[c] - dark[c]) + noise);
      }
    }
  }
  return out;
}

Sprite render_object(std::size_t object_class, std::uint64_t seed, std::size_t side) {
  if (object_class >= kMaxObjectClasses) {
    throw Error(ErrorCode::kUnknownClass,
                "object class " + std::to_string(object_class) + " (max " +
                    std::to_string(kMaxObjectClasses) + ")");
  }
  if (side < 4) throw Error(ErrorCode::kInvalidArgument, "sprite side must be >= 4");
  Rng rng(seed);
  const double rot = rng.uniform(-0.15, 0.15);
  const double shade = rng.uniform(-0.05, 0.05);
  const auto color = hsv(static_cast<double>(object_class) / kMaxObjectClasses, 0.9,
                         0.9 + shade);
  const double cr = std::cos(rot), sr = std::sin(rot);

  Sprite s{Tensor({3, side, side}), Tensor({side, side})};
  const double n = static_cast<double>(side);
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const double px = 2.0 * (static_cast<double>(x) + 0.5) / n - 1.0;
      const double py = 2.0 * (static_cast<double>(y) + 0.5) / n - 1.0;
      const double u = cr * px + sr * py, v = -sr * px + cr * py;
      if (!inside_shape(object_class, u, v)) continue;
      s.alpha(y, x) = 1.0f;
      const double light = 0.85 + 0.15 * (1.0 - py) / 2.0;
      for (std::size_t c = 0; c < 3; ++c) {
        // Keep every channel strictly positive so the support is exact.
        s.rgb(c, y, x) = clamp01(std::max(color[c] * light, 0.05));
      }
    }
  }
  return s;
}

Sprite resize_sprite(const Sprite& sprite, std::size_t side) {
  const std::size_t src = sprite.alpha.dim(0);
  Sprite out{Tensor({3, side, side}), Tensor({side, side})};
  for (std::size_t y = 0; y < side; ++y) {
    const std::size_t sy = (2 * y + 1) * src / (2 * side);
    for (std::size_t x = 0; x < side; ++x) {
      const std::size_t sx = (2 * x + 1) * src / (2 * side);
      out.alpha(y, x) = sprite.alpha(sy, sx);
      for (std::size_t c = 0; c < 3; ++c) out.rgb(c, y, x) = sprite.rgb(c, sy, sx);
    }
  }
  return out;
}

ComposedPair compose(const Tensor& scene, const Sprite& sprite, std::uint64_t seed) {
  if (scene.rank() != 3 || scene.dim(0) != 3 || scene.dim(1) != scene.dim(2)) {
    throw Error(ErrorCode::kShapeMismatch, "scene must be [3,S,S]");
  }
  const std::size_t S = scene.dim(1);
  const std::size_t lo = (S + 2) / 3, hi = S / 2;
  Rng rng(seed);
  const std::size_t side = lo + rng.index(hi - lo + 1);
  const std::size_t x0 = rng.index(S - side + 1);
  const std::size_t y0 = rng.index(S - side + 1);
  const Sprite small = resize_sprite(sprite, side);

  Tensor twin = scene;
  quantize_8bit(twin);
  Tensor image = twin;
  Tensor mask({S, S});
  constexpr float kLevel = 1.0f / 255.0f;
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      if (small.alpha(y, x) == 0.0f) continue;
      const std::size_t iy = y0 + y, ix = x0 + x;
      mask(iy, ix) = 1.0f;
      bool same = true;
      for (std::size_t c = 0; c < 3; ++c) {
        Tensor px({1}, small.rgb(c, y, x));
        quantize_8bit(px);
        image(c, iy, ix) = px[0];
        same = same && px[0] == twin(c, iy, ix);
      }
      if (same) {
        const float v = image(0, iy, ix);
        Tensor px({1}, v <= 0.5f ? v + kLevel : v - kLevel);
        quantize_8bit(px);
        image(0, iy, ix) = px[0];
      }
    }
  }

  ComposedPair pair;
  const Placement placement{x0, y0, static_cast<double>(side) / static_cast<double>(S)};
  GroundTruthMask gt(std::move(mask), MaskKind::kConcept);
  pair.with_cf.image = std::move(image);
  pair.with_cf.cf_mask = gt;
  pair.with_cf.has_cf = true;
  pair.with_cf.placement = placement;
  pair.without_cf.image = std::move(twin);
  pair.without_cf.cf_mask = std::move(gt);
  pair.without_cf.has_cf = false;
  pair.without_cf.placement = placement;
  return pair;
}

PairLabels pair_labels(const GeneratorConfig& config, std::size_t pair_id) {
  const std::size_t per_object = config.n_scene_classes * config.samples_per_combined_label;
  const std::size_t object = pair_id / per_object;
  std::size_t scene = (pair_id % per_object) / config.samples_per_combined_label;
  std::size_t sprite = object;
  if (config.spurious) {
    const SpuriousCorrelation& s = *config.spurious;
    if (object == s.object_class) {
      scene = s.scene_class;
      sprite = s.mimic_class;
    } else if (object == s.mimic_class && scene == s.scene_class) {
      scene = (s.scene_class + 1) % config.n_scene_classes;
    }
  }
  return {object, scene, sprite};
}

ComposedPair generate_pair(const GeneratorConfig& config, std::size_t pair_id) {
  if (pair_id >= config.pair_count()) {
    throw Error(ErrorCode::kInvalidArgument, "pair id out of range");
  }
  const PairLabels labels = pair_labels(config, pair_id);
  const std::uint64_t base = derive_seed(config.seed, pair_id);
  const Tensor scene = render_scene(labels.scene_label, derive_seed(base, 1), config.image_size);
  const Sprite sprite = render_object(labels.sprite_class, derive_seed(base, 2));
  ComposedPair pair = compose(scene, sprite, derive_seed(base, 3));
  for (SampleRecord* r : {&pair.with_cf, &pair.without_cf}) {
    r->object_label = labels.object_label;
    r->scene_label = labels.scene_label;
    r->pair_id = pair_id;
    r->image_path = "images/" + r->sample_id() + ".ppm";
    r->mask_path = mask_rel_path(pair_id);
  }
  return pair;
}

std::vector<SampleRecord> generate_records(const GeneratorConfig& config) {
  config.validate();
  std::vector<SampleRecord> out;
  out.reserve(2 * config.pair_count());
  for (std::size_t i = 0; i < config.pair_count(); ++i) {
    ComposedPair p = generate_pair(config, i);
    out.push_back(std::move(p.with_cf));
    out.push_back(std::move(p.without_cf));
  }
  return out;
}

std::vector<SampleRecord> generate_dataset(const GeneratorConfig& config,
                                           const std::filesystem::path& root,
                                           std::size_t workers) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(root / "images", ec);
  std::filesystem::create_directories(root / "masks", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + root.string() + ": " + ec.message());

  const std::size_t n = config.pair_count();
  std::vector<SampleRecord> records(2 * n);
  parallel_for(n, workers, [&](std::size_t i) {
    ComposedPair p = generate_pair(config, i);
    write_ppm(root / p.with_cf.image_path, p.with_cf.image);
    write_ppm(root / p.without_cf.image_path, p.without_cf.image);
    write_pgm(root / p.with_cf.mask_path, p.with_cf.cf_mask->mask());
    p.with_cf.image = Tensor();
    p.without_cf.image = Tensor();
    records[2 * i] = std::move(p.with_cf);
    records[2 * i + 1] = std::move(p.without_cf);
  });

  std::ofstream manifest(root / "manifest.jsonl", std::ios::binary);
  if (!manifest) throw Error(ErrorCode::kIo, "cannot write manifest in " + root.string());
  for (const SampleRecord& r : records) manifest << record_to_json(r).dump() << '\n';
  std::ofstream cfg(root / "config.json", std::ios::binary);
  cfg << generator_config_to_json(config) << '\n';
  if (!manifest || !cfg) throw Error(ErrorCode::kIo, "write failed in " + root.string());
  return records;
}

void load_pixels(const std::filesystem::path& root, SampleRecord& record) {
  record.image = read_pnm(root / record.image_path);
  if (!record.mask_path.empty()) {
    Tensor m = read_pnm(root / record.mask_path);
    Tensor plane({m.dim(1), m.dim(2)});
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = m[i] > 0.5f ? 1.0f : 0.0f;
    record.cf_mask = GroundTruthMask(std::move(plane), MaskKind::kConcept);
  }
}

std::vector<SampleRecord> load_manifest(const std::filesystem::path& root,
                                        bool with_pixels) {
  std::ifstream in(root / "manifest.jsonl");
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + (root / "manifest.jsonl").string());
  std::vector<SampleRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    SampleRecord r;
    try {
      const json j = json::parse(line);
      r.image_path = j.at("image").get<std::string>();
      r.object_label = j.at("object_label").get<std::size_t>();
      r.scene_label = j.at("scene_label").get<std::size_t>();
      if (j.contains("cf_mask") && !j.at("cf_mask").is_null()) {
        r.mask_path = j.at("cf_mask").get<std::string>();
      }
      r.pair_id = j.at("pair_id").get<std::size_t>();
      r.has_cf = j.at("has_cf").get<bool>();
      const json& p = j.at("placement");
      r.placement = {p.at("x").get<std::size_t>(), p.at("y").get<std::size_t>(),
                     p.at("scale").get<double>()};
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat,
                  "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (with_pixels) load_pixels(root, r);
    out.push_back(std::move(r));
  }
  return out;
}

GeneratorConfig generator_config_from_json(const std::string& text) {
  GeneratorConfig c;
  try {
    const json j = json::parse(text);
    c.n_object_classes = j.value("n_object_classes", c.n_object_classes);
    c.n_scene_classes = j.value("n_scene_classes", c.n_scene_classes);
    c.image_size = j.value("image_size", c.image_size);
    c.samples_per_combined_label =
        j.value("samples_per_combined_label", c.samples_per_combined_label);
    if (!j.contains("seed")) throw Error(ErrorCode::kConfigInvalid, "seed is mandatory");
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("spurious") && !j.at("spurious").is_null()) {
      const json& s = j.at("spurious");
      c.spurious = SpuriousCorrelation{s.at("object_class").get<std::size_t>(),
                                       s.at("scene_class").get<std::size_t>(),
                                       s.at("mimic_class").get<std::size_t>()};
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, std::string("generator config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string generator_config_to_json(const GeneratorConfig& config) {
  json j = {{"n_object_classes", config.n_object_classes},
            {"n_scene_classes", config.n_scene_classes},
            {"image_size", config.image_size},
            {"samples_per_combined_label", config.samples_per_combined_label},
            {"seed", config.seed}};
  if (config.spurious) {
    j["spurious"] = {{"object_class", config.spurious->object_class},
                     {"scene_class", config.spurious->scene_class},
                     {"mimic_class", config.spurious->mimic_class}};
  }
  return j.dump(2);
}

}  // namespace sbench
