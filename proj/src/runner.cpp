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

#include "saliencybench/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "saliencybench/image_ops.hpp"
#include "saliencybench/parallel.hpp"
#include "saliencybench/report.hpp"
#include "saliencybench/rng.hpp"

namespace sbench {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorCode::kConfigInvalid, msg);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      config_error("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

LabelKind label_from(const std::string& s) {
  if (s == "object") return LabelKind::kObject;
  if (s == "scene") return LabelKind::kScene;
  config_error("label must be 'object' or 'scene', got '" + s + "'");
}

const char* label_name(LabelKind k) { return k == LabelKind::kObject ? "object" : "scene"; }

ModelSection parse_model(const json& j, const fs::path& base, const std::string& where) {
  check_keys(j, where, {"path", "bridge"});
  ModelSection m;
  if (j.contains("path")) m.path = resolve(base, j.at("path").get<std::string>());
  if (j.contains("bridge")) {
    const json& b = j.at("bridge");
    check_keys(b, where + ".bridge", {"command", "timeout_ms"});
    BridgeOptions o;
    o.command = b.at("command").get<std::vector<std::string>>();
    if (o.command.empty()) config_error(where + ".bridge.command is empty");
    if (b.contains("timeout_ms")) {
      o.timeout = std::chrono::milliseconds(b.at("timeout_ms").get<std::int64_t>());
    }
    m.bridge = std::move(o);
  }
  if (m.path && m.bridge) config_error(where + " takes either path or bridge, not both");
  return m;
}

bool in_split(std::size_t pair_id, const std::string& split) {
  if (split == "all") return true;
  const bool val = pair_id % 5 == 4;
  return split == "val" ? val : !val;
}

std::size_t label_of(const SampleRecord& r, LabelKind kind) {
  return kind == LabelKind::kObject ? r.object_label : r.scene_label;
}

std::string dataset_name(const RunConfig& c) {
  if (!c.dataset.name.empty()) return c.dataset.name;
  fs::path p = c.dataset.path;
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + p.string() + ": " + ec.message());
}

// With-CF records of the configured split, pixels loaded, in pair order.
std::vector<SampleRecord> select_samples(const RunConfig& c, const std::string& split,
                                         std::size_t max_samples, bool twins = false) {
  std::vector<SampleRecord> all = load_manifest(c.dataset.path, false);
  std::vector<SampleRecord> out;
  std::set<std::size_t> taken;
  for (SampleRecord& r : all) {
    if (!r.has_cf || !in_split(r.pair_id, split)) continue;
    if (max_samples != 0 && taken.size() >= max_samples) break;
    taken.insert(r.pair_id);
    out.push_back(std::move(r));
  }
  if (twins) {
    for (SampleRecord& r : all) {
      if (!r.has_cf && taken.count(r.pair_id)) out.push_back(std::move(r));
    }
  }
  for (SampleRecord& r : out) load_pixels(c.dataset.path, r);
  return out;
}

Explainer oracle_explainer(const GroundTruthMask& mask) {
  return [mask](const Model& model, const Tensor&, std::size_t c) {
    SaliencyMap m;
    m.scores = mask.mask();
    m.method = "oracle";
    m.class_index = c;
    m.model_id = model.model_id();
    m.provenance = "ground_truth_mask";
    return m;
  };
}

// Explainer for a method name; oracle needs the sample's mask.
Explainer explainer_for(const RunConfig& c, const std::string& method,
                        const std::optional<GroundTruthMask>& mask) {
  if (method == "random") return random_explainer(c.seed);
  if (method == "oracle") {
    if (!mask) throw Error(ErrorCode::kMissingMasks, "oracle needs a ground-truth mask");
    return oracle_explainer(*mask);
  }
  ExplainerConfig e;
  e.method = *method_from_name(method);
  e.layer = c.params.layer;
  e.intgrad_steps = c.params.intgrad_steps;
  e.occlusion = c.params.occlusion;
  e.rise = c.params.mask;
  e.rise.seed = derive_seed(c.seed, 0x815E);
  return make_explainer(e);
}

std::string run_echo(const RunConfig& c, const std::string& command) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = c.seed;
  j["dataset"] = dataset_name(c);
  j["methods"] = c.methods;
  j["metrics"] = c.metrics;
  j["iosr_theta"] = c.params.iosr_theta;
  j["insertion_steps"] = c.params.insertion_steps;
  j["insertion_reference"] = c.params.insertion_blur ? "blur" : "constant";
  j["sensitivity_radius"] = c.params.sensitivity_radius;
  j["sensitivity_samples"] = c.params.sensitivity_samples;
  j["sweep_radii"] = c.params.sweep_radii;
  j["intgrad_steps"] = c.params.intgrad_steps;
  j["mask"] = {{"grid_size", c.params.mask.grid_size},
               {"keep_probability", c.params.mask.keep_probability},
               {"mask_count", c.params.mask.mask_count}};
  return j.dump(2) + "\n";
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigInvalid: return kExitConfig;
    case ErrorCode::kCapabilityMissing: return kExitCapability;
    case ErrorCode::kIo:
    case ErrorCode::kFormat: return kExitIo;
    default: return kExitFailure;
  }
}

bool is_known_method(const std::string& name) {
  return name == "random" || name == "oracle" || method_from_name(name).has_value();
}

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  try {
    check_keys(j, "config",
               {"seed", "workers", "output_dir", "dataset", "model", "scene_model", "train",
                "methods", "metrics", "params", "cleverhans", "bridge_check"});
    if (!j.contains("seed")) config_error("seed is mandatory");
    c.seed = j.at("seed").get<std::uint64_t>();
    read(j, "workers", c.workers);
    if (c.workers < 1) config_error("workers must be >= 1");
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    else c.output_dir = base_dir / c.output_dir;

    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      check_keys(d, "dataset", {"path", "generate", "name", "split", "max_samples"});
      if (!d.contains("path")) config_error("dataset.path is required");
      c.dataset.path = resolve(base_dir, d.at("path").get<std::string>());
      if (d.contains("generate")) {
        json g = d.at("generate");
        if (!g.contains("seed")) g["seed"] = c.seed;
        c.dataset.generate = generator_config_from_json(g.dump());
      }
      read(d, "name", c.dataset.name);
      read(d, "split", c.dataset.split);
      if (c.dataset.split != "train" && c.dataset.split != "val" && c.dataset.split != "all") {
        config_error("dataset.split must be train, val or all");
      }
      read(d, "max_samples", c.dataset.max_samples);
    }
    if (j.contains("model")) c.model = parse_model(j.at("model"), base_dir, "model");
    if (j.contains("scene_model")) {
      c.scene_model = parse_model(j.at("scene_model"), base_dir, "scene_model");
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      check_keys(t, "train", {"epochs", "learning_rate", "batch_size", "label", "conv_channels",
                              "hidden_units", "model_id"});
      read(t, "epochs", c.train.options.epochs);
      read(t, "learning_rate", c.train.options.learning_rate);
      read(t, "batch_size", c.train.options.batch_size);
      if (t.contains("label")) c.train.label = label_from(t.at("label").get<std::string>());
      read(t, "conv_channels", c.train.arch.conv_channels);
      read(t, "hidden_units", c.train.arch.hidden_units);
      if (t.contains("model_id")) c.train.model_id = t.at("model_id").get<std::string>();
      if (!(c.train.options.learning_rate > 0.0)) config_error("learning_rate must be > 0");
      if (c.train.options.batch_size < 1) config_error("batch_size must be >= 1");
    }
    if (j.contains("methods")) c.methods = j.at("methods").get<std::vector<std::string>>();
    for (const std::string& m : c.methods) {
      if (!is_known_method(m)) config_error("unknown method '" + m + "'");
    }
    if (j.contains("metrics")) c.metrics = j.at("metrics").get<std::vector<std::string>>();
    for (const std::string& m : c.metrics) {
      const auto& a = per_sample_metric_names();
      const auto& b = dataset_metric_names();
      if (std::find(a.begin(), a.end(), m) == a.end() &&
          std::find(b.begin(), b.end(), m) == b.end()) {
        config_error("unknown metric '" + m + "'");
      }
    }
    if (j.contains("params")) {
      const json& p = j.at("params");
      check_keys(p, "params", {"iosr_theta", "insertion_steps", "insertion_reference",
                               "insertion_constant", "sensitivity", "intgrad_steps", "mask",
                               "occlusion", "layer"});
      MetricParams& mp = c.params;
      read(p, "iosr_theta", mp.iosr_theta);
      if (!(mp.iosr_theta > 0.0 && mp.iosr_theta < 1.0)) config_error("iosr_theta must be in (0,1)");
      read(p, "insertion_steps", mp.insertion_steps);
      if (mp.insertion_steps < 1) config_error("insertion_steps must be >= 1");
      if (p.contains("insertion_reference")) {
        const std::string r = p.at("insertion_reference").get<std::string>();
        if (r != "blur" && r != "constant") config_error("insertion_reference must be blur or constant");
        mp.insertion_blur = r == "blur";
      }
      read(p, "insertion_constant", mp.insertion_constant);
      if (p.contains("sensitivity")) {
        const json& s = p.at("sensitivity");
        check_keys(s, "params.sensitivity", {"radius", "samples", "radii"});
        read(s, "radius", mp.sensitivity_radius);
        read(s, "samples", mp.sensitivity_samples);
        read(s, "radii", mp.sweep_radii);
        PerturbationSpec{mp.sensitivity_radius, mp.sensitivity_samples,
                         PerturbationNorm::kLinf, 0}
            .validate();
        if (!std::is_sorted(mp.sweep_radii.begin(), mp.sweep_radii.end())) {
          config_error("params.sensitivity.radii must be ascending");
        }
      }
      read(p, "intgrad_steps", mp.intgrad_steps);
      if (mp.intgrad_steps < 1) config_error("intgrad_steps must be >= 1");
      if (p.contains("mask")) {
        const json& m = p.at("mask");
        check_keys(m, "params.mask", {"grid_size", "keep_probability", "mask_count"});
        read(m, "grid_size", mp.mask.grid_size);
        read(m, "keep_probability", mp.mask.keep_probability);
        read(m, "mask_count", mp.mask.mask_count);
      }
      if (p.contains("occlusion")) {
        const json& o = p.at("occlusion");
        check_keys(o, "params.occlusion", {"patch_size", "stride", "baseline"});
        OcclusionSpec spec;
        read(o, "patch_size", spec.patch_size);
        read(o, "stride", spec.stride);
        read(o, "baseline", spec.baseline);
        mp.occlusion = spec;
      }
      if (p.contains("layer")) mp.layer = p.at("layer").get<std::string>();
    }
    if (j.contains("cleverhans")) {
      const json& h = j.at("cleverhans");
      check_keys(h, "cleverhans", {"method", "theta_c", "theta_l", "theta_f", "localization",
                                   "iosr_theta", "insertion_steps"});
      read(h, "method", c.cleverhans_method);
      if (!is_known_method(c.cleverhans_method)) {
        config_error("unknown cleverhans method '" + c.cleverhans_method + "'");
      }
      read(h, "theta_c", c.criteria.confidence);
      read(h, "theta_l", c.criteria.localization);
      read(h, "theta_f", c.criteria.faithfulness);
      if (h.contains("localization")) {
        const std::string m = h.at("localization").get<std::string>();
        if (m == "iosr") c.criteria.mode = LocalizationMode::kIosr;
        else if (m == "pg_hit") c.criteria.mode = LocalizationMode::kPointingHit;
        else config_error("cleverhans.localization must be iosr or pg_hit");
      }
      c.criteria.iosr_theta = c.params.iosr_theta;
      read(h, "iosr_theta", c.criteria.iosr_theta);
      c.criteria.insertion_steps = c.params.insertion_steps;
      read(h, "insertion_steps", c.criteria.insertion_steps);
      try {
        c.criteria.validate();
      } catch (const Error& e) {
        config_error(std::string("cleverhans: ") + e.what());
      }
    } else {
      c.criteria.iosr_theta = c.params.iosr_theta;
      c.criteria.insertion_steps = c.params.insertion_steps;
    }
    if (j.contains("bridge_check")) {
      const json& b = j.at("bridge_check");
      check_keys(b, "bridge_check", {"samples", "reference_model"});
      read(b, "samples", c.bridge_check_samples);
      if (b.contains("reference_model")) {
        c.reference_model = resolve(base_dir, b.at("reference_model").get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    config_error(std::string("config: ") + e.what());
  }
  c.train.options.seed = c.seed;
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigInvalid, "cannot read config " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_run_config(s.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

void apply_overrides(RunConfig& config, const CliOverrides& o) {
  if (o.output_dir) config.output_dir = *o.output_dir;
  if (o.workers) {
    if (*o.workers < 1) config_error("--workers must be >= 1");
    config.workers = *o.workers;
  }
  if (o.seed) {
    config.seed = *o.seed;
    config.train.options.seed = *o.seed;
  }
}

std::unique_ptr<Model> open_model(const ModelSection& section) {
  if (section.bridge) return std::make_unique<BridgedModel>(*section.bridge);
  if (section.path) return std::make_unique<MicroCnn>(MicroCnn::load(*section.path));
  config_error("model needs a path or a bridge command");
}

// ---------------------------------------------------------------------------

int cmd_dataset_gen(const RunConfig& c) {
  if (!c.dataset.generate) config_error("dataset.generate is required for dataset-gen");
  const auto records = generate_dataset(*c.dataset.generate, c.dataset.path, c.workers);
  spdlog::info("wrote {} records to {}", records.size(), c.dataset.path.string());
  return kExitOk;
}

int cmd_train(const RunConfig& c) {
  if (!c.model.path) config_error("model.path (output file) is required for train");
  const auto records = load_manifest(c.dataset.path, false);
  std::vector<Tensor> train_x, val_x;
  std::vector<std::size_t> train_y, val_y;
  ArchitectureSpec arch = c.train.arch;
  std::size_t classes = 0;
  for (const SampleRecord& r : records) {
    if (!r.has_cf) continue;
    SampleRecord full = r;
    full.mask_path.clear();
    load_pixels(c.dataset.path, full);
    const std::size_t y = label_of(r, c.train.label);
    classes = std::max(classes, y + 1);
    if (in_split(r.pair_id, "val")) {
      val_x.push_back(std::move(full.image));
      val_y.push_back(y);
    } else {
      train_x.push_back(std::move(full.image));
      train_y.push_back(y);
    }
  }
  if (train_x.empty()) throw Error(ErrorCode::kInvalidArgument, "no training samples");
  // Class count comes from the generator config when it is on disk.
  const fs::path gen_path = c.dataset.path / "config.json";
  if (fs::exists(gen_path)) {
    const GeneratorConfig g = generator_config_from_json(read_text_file(gen_path));
    classes = c.train.label == LabelKind::kObject ? g.n_object_classes : g.n_scene_classes;
  }
  arch.num_classes = classes;
  arch.input_shape = train_x.front().shape();
  spdlog::info("training {} classifier on {} images ({} held out)", label_name(c.train.label),
               train_x.size(), val_x.size());
  TrainResult result = train_micro_cnn(train_x, train_y, arch, c.train.options,
                                       [](std::size_t epoch, double loss) {
                                         spdlog::info("epoch {} loss {:.6f}", epoch + 1, loss);
                                       });
  result.model.set_model_id(c.train.model_id.value_or(
      std::string("micro_cnn_") + label_name(c.train.label) + "_s" + std::to_string(c.seed)));
  if (c.model.path->has_parent_path()) ensure_dir(c.model.path->parent_path());
  result.model.save(*c.model.path);
  const double val_acc =
      val_x.empty() ? 0.0 : classification_accuracy(result.model, val_x, val_y);

  nlohmann::ordered_json report;
  report["model_id"] = result.model.model_id();
  report["label"] = label_name(c.train.label);
  report["train_samples"] = train_x.size();
  report["val_samples"] = val_x.size();
  report["train_accuracy"] = result.train_accuracy;
  report["val_accuracy"] = val_acc;
  report["epoch_losses"] = result.epoch_losses;
  ensure_dir(c.output_dir);
  write_text_file(c.output_dir / "train_report.json", report.dump(2) + "\n");
  spdlog::info("train accuracy {:.4f}, val accuracy {:.4f}", result.train_accuracy, val_acc);
  std::printf("train_accuracy=%.6f val_accuracy=%.6f\n", result.train_accuracy, val_acc);
  return kExitOk;
}

int cmd_explain(const RunConfig& c) {
  if (c.methods.empty()) config_error("methods must list at least one method");
  const auto model = open_model(c.model);
  const auto samples = select_samples(c, c.dataset.split,
                                      c.dataset.max_samples ? c.dataset.max_samples : 3);
  const fs::path maps_dir = c.output_dir / "maps";
  ensure_dir(maps_dir);

  struct Outcome {
    std::string sample, method;
    std::optional<ErrorCode> error;
    std::string message;
  };
  const std::size_t n_methods = c.methods.size();
  std::vector<Outcome> outcomes(samples.size() * n_methods);
  parallel_for(outcomes.size(), c.workers, [&](std::size_t t) {
    const SampleRecord& s = samples[t / n_methods];
    const std::string& method = c.methods[t % n_methods];
    Outcome& o = outcomes[t];
    o.sample = s.sample_id();
    o.method = method;
    try {
      const SaliencyMap map = explainer_for(c, method, s.cf_mask)(
          *model, s.image, label_of(s, c.train.label));
      const std::string stem = s.sample_id() + "_" + method;
      write_saliency_map(maps_dir / (stem + ".sbsm"), map);
      write_saliency_pgm(maps_dir / (stem + ".pgm"), map);
    } catch (const Error& e) {
      o.error = e.code();
      o.message = e.what();
      spdlog::warn("{} / {}: {} ({})", o.sample, method, error_code_name(e.code()), e.what());
    }
  });

  nlohmann::ordered_json report = nlohmann::ordered_json::array();
  std::set<std::string> usable;
  for (const Outcome& o : outcomes) {
    nlohmann::ordered_json e;
    e["sample"] = o.sample;
    e["method"] = o.method;
    e["status"] = o.error ? error_code_name(*o.error) : "OK";
    if (o.error) e["message"] = o.message;
    report.push_back(e);
    if (!o.error || *o.error != ErrorCode::kCapabilityMissing) usable.insert(o.method);
  }
  write_text_file(c.output_dir / "explain_report.json", report.dump(2) + "\n");
  if (usable.empty()) {
    spdlog::error("every requested method needs a capability the model lacks");
    return kExitCapability;
  }
  return kExitOk;
}

namespace {

struct TaskOutput {
  std::vector<MetricRow> rows;
  std::string insertion_csv;
  std::string sweep_csv;
  bool capability_missing = false;
};

bool wants(const RunConfig& c, const char* metric) {
  return std::find(c.metrics.begin(), c.metrics.end(), metric) != c.metrics.end();
}

// All per-sample metrics of one (sample, method) pair.
TaskOutput evaluate_task(const RunConfig& c, const Model& model, const SampleRecord& s,
                         const std::string& method, const std::string& dataset) {
  TaskOutput out;
  const std::string scope = "sample:" + s.sample_id();
  const std::size_t label = label_of(s, c.train.label);
  auto row = [&](const std::string& metric, std::optional<double> v) {
    out.rows.push_back({dataset, model.model_id(), method, metric, scope, v,
                        v ? std::size_t{1} : 0, v ? std::size_t{0} : 1, c.seed});
  };
  auto guarded = [&](const std::string& metric, auto&& fn) {
    try {
      row(metric, fn());
    } catch (const Error& e) {
      spdlog::warn("{} {} {}: {} ({})", s.sample_id(), method, metric,
                   error_code_name(e.code()), e.what());
      row(metric, std::nullopt);
    }
  };

  Explainer explainer;
  std::optional<SaliencyMap> map;
  try {
    explainer = explainer_for(c, method, s.cf_mask);
    map = explainer(model, s.image, label);
  } catch (const Error& e) {
    spdlog::warn("{} {}: explainer failed: {} ({})", s.sample_id(), method,
                 error_code_name(e.code()), e.what());
    out.capability_missing = e.code() == ErrorCode::kCapabilityMissing;
    for (const std::string& m : per_sample_metric_names()) {
      if (wants(c, m.c_str())) row(m, std::nullopt);
    }
    return out;
  }

  for (const std::string& metric : per_sample_metric_names()) {
    if (!wants(c, metric.c_str())) continue;
    if (metric == "iauc") {
      guarded(metric, [&] {
        const Tensor reference = c.params.insertion_blur
                                     ? insertion_reference_blur(s.image)
                                     : Tensor(s.image.shape(), c.params.insertion_constant);
        const InsertionCurve curve =
            insertion_auc(model, s.image, label, map->scores, reference,
                          std::min(c.params.insertion_steps, map->scores.size()));
        for (std::size_t k = 0; k < curve.scores.size(); ++k) {
          out.insertion_csv += s.sample_id() + "," + std::to_string(k) + "," +
                               format_value(curve.fractions[k]) + "," +
                               format_value(curve.scores[k]) + "\n";
        }
        return curve.iauc;
      });
    } else if (metric == "pg") {
      guarded(metric, [&] {
        if (!s.cf_mask) throw Error(ErrorCode::kMissingMasks, "no mask");
        return pointing_game(map->scores, *s.cf_mask).hit ? 1.0 : 0.0;
      });
    } else if (metric == "iosr") {
      guarded(metric, [&] {
        if (!s.cf_mask) throw Error(ErrorCode::kMissingMasks, "no mask");
        return iosr(map->scores, *s.cf_mask, c.params.iosr_theta);
      });
    } else if (metric == "sco") {
      guarded(metric, [&] {
        if (!s.cf_mask) throw Error(ErrorCode::kMissingMasks, "no mask");
        return concept_contribution(map->scores, *s.cf_mask);
      });
    } else if (metric == "cs") {
      guarded(metric, [&] { return class_sensitivity(model, explainer, s.image); });
    } else if (metric == "sens_max") {
      const std::uint64_t seed = derive_seed(c.seed, s.pair_id);
      guarded(metric, [&] {
        return max_sensitivity(model, explainer, s.image, label,
                               {c.params.sensitivity_radius, c.params.sensitivity_samples,
                                PerturbationNorm::kLinf, seed});
      });
      if (!c.params.sweep_radii.empty()) {
        try {
          const auto curve = sensitivity_radius_sweep(model, explainer, s.image, label,
                                                      c.params.sweep_radii,
                                                      c.params.sensitivity_samples, seed);
          for (std::size_t j = 0; j < curve.size(); ++j) {
            out.sweep_csv += s.sample_id() + "," + format_value(c.params.sweep_radii[j]) +
                             "," + format_value(curve[j]) + "\n";
          }
        } catch (const Error& e) {
          spdlog::warn("{} {}: sweep failed: {}", s.sample_id(), method, e.what());
        }
      }
    }
  }
  return out;
}

std::vector<ConceptPair> make_pairs(const std::vector<SampleRecord>& samples) {
  std::map<std::size_t, const SampleRecord*> with, without;
  for (const SampleRecord& s : samples) (s.has_cf ? with : without)[s.pair_id] = &s;
  std::vector<ConceptPair> pairs;
  for (const auto& [id, w] : with) {
    const auto it = without.find(id);
    if (it == without.end() || !w->cf_mask) {
      throw Error(ErrorCode::kUnpairedSample, "pair " + std::to_string(id) + " is incomplete");
    }
    pairs.push_back({w->image, it->second->image, *w->cf_mask, w->object_label, w->scene_label});
  }
  return pairs;
}

}  // namespace

int cmd_evaluate(const RunConfig& c) {
  if (c.methods.empty()) config_error("methods must list at least one method");
  if (c.metrics.empty()) config_error("metrics must list at least one metric");
  bool needs_scene = false;
  for (const char* m : {"mcs", "mcr", "idr"}) needs_scene = needs_scene || wants(c, m);
  if (needs_scene && !c.scene_model) config_error("mcs/mcr/idr need scene_model");
  if (needs_scene && c.train.label != LabelKind::kObject) {
    config_error("mcs/mcr/idr need train.label = object for the main model");
  }

  const auto model = open_model(c.model);
  const std::unique_ptr<Model> scene_model = needs_scene ? open_model(*c.scene_model) : nullptr;
  const bool dataset_level = needs_scene || wants(c, "gco");
  std::vector<SampleRecord> loaded =
      select_samples(c, c.dataset.split, c.dataset.max_samples, dataset_level);
  std::vector<SampleRecord> samples;
  for (const SampleRecord& r : loaded) {
    if (r.has_cf) samples.push_back(r);
  }
  const std::string dataset = dataset_name(c);
  spdlog::info("evaluating {} methods on {} samples with {} workers", c.methods.size(),
               samples.size(), c.workers);

  bool per_sample = false;
  for (const std::string& m : per_sample_metric_names()) per_sample = per_sample || wants(c, m.c_str());
  const std::size_t n_methods = c.methods.size();
  std::vector<TaskOutput> outputs(per_sample ? samples.size() * n_methods : 0);
  parallel_for(outputs.size(), c.workers, [&](std::size_t t) {
    // Method-major order so rows group by method.
    const std::size_t m = t / samples.size(), i = t % samples.size();
    outputs[t] = evaluate_task(c, *model, samples[i], c.methods[m], dataset);
  });

  std::vector<MetricRow> rows;
  std::set<std::string> capable;
  std::map<std::string, std::string> insertion, sweep;
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    const std::string& method = c.methods[t / std::max<std::size_t>(1, samples.size())];
    rows.insert(rows.end(), outputs[t].rows.begin(), outputs[t].rows.end());
    insertion[method] += outputs[t].insertion_csv;
    sweep[method] += outputs[t].sweep_csv;
    if (!outputs[t].capability_missing) capable.insert(method);
  }
  std::vector<MetricRow> per_sample_rows = rows;
  // Per-metric rows were appended sample by sample; regroup by metric so the
  // CSV reads method -> metric -> sample.
  std::stable_sort(rows.begin(), rows.end(), [&](const MetricRow& a, const MetricRow& b) {
    if (a.method != b.method) {
      return std::find(c.methods.begin(), c.methods.end(), a.method) <
             std::find(c.methods.begin(), c.methods.end(), b.method);
    }
    const auto& names = per_sample_metric_names();
    return std::find(names.begin(), names.end(), a.metric) <
           std::find(names.begin(), names.end(), b.metric);
  });
  std::vector<MetricRow> all = rows;
  if (!per_sample_rows.empty()) {
    for (const MetricRow& r : aggregate_report(per_sample_rows)) all.push_back(r);
  }

  // Dataset-level metrics.
  if (dataset_level) {
    const std::vector<ConceptPair> pairs = make_pairs(loaded);
    std::vector<Tensor> images;
    std::vector<GroundTruthMask> masks;
    std::vector<std::size_t> objects, scenes;
    for (const ConceptPair& p : pairs) {
      images.push_back(p.with_cf);
      masks.push_back(p.cf_mask);
      objects.push_back(p.object_label);
      scenes.push_back(p.scene_label);
    }
    for (const std::string& method : c.methods) {
      auto add = [&](const std::string& metric, std::optional<Contribution> v) {
        MetricRow r{dataset, model->model_id(), method, metric, "aggregate", std::nullopt,
                    0, pairs.size(), c.seed};
        if (v) {
          r.value = v->value;
          r.n_included = v->n_included;
          r.n_excluded = v->n_excluded;
        }
        all.push_back(r);
      };
      auto guarded = [&](const std::string& metric, auto&& fn) {
        if (!wants(c, metric.c_str())) return;
        try {
          if (method == "oracle") {
            throw Error(ErrorCode::kInvalidArgument, "oracle has no dataset-level form");
          }
          add(metric, fn());
        } catch (const Error& e) {
          spdlog::warn("{} {}: {} ({})", method, metric, error_code_name(e.code()), e.what());
          add(metric, std::nullopt);
        }
      };
      auto explainer = [&] { return explainer_for(c, method, std::nullopt); };
      guarded("gco", [&] {
        return global_contribution(*model, explainer(), images, masks, objects);
      });
      guarded("mcs", [&] {
        const Contribution go = global_contribution(*model, explainer(), images, masks, objects);
        const Contribution gs =
            global_contribution(*scene_model, explainer(), images, masks, scenes);
        return Contribution{mcs(go.value, gs.value), std::min(go.n_included, gs.n_included),
                            std::max(go.n_excluded, gs.n_excluded)};
      });
      guarded("mcr", [&] { return mcr(*model, *scene_model, explainer(), pairs); });
      guarded("idr", [&] { return idr(*scene_model, explainer(), pairs); });
    }
  }

  ensure_dir(c.output_dir / "curves");
  write_text_file(c.output_dir / "metrics.csv", rows_to_csv(all));
  write_text_file(c.output_dir / "metrics.json", rows_to_json(all));
  write_text_file(c.output_dir / "run.json", run_echo(c, "evaluate"));
  for (const std::string& method : c.methods) {
    if (wants(c, "iauc")) {
      write_text_file(c.output_dir / "curves" / ("insertion_" + method + ".csv"),
                      "sample,step,fraction,score\n" + insertion[method]);
    }
    if (wants(c, "sens_max") && !c.params.sweep_radii.empty()) {
      write_text_file(c.output_dir / "curves" / ("sensitivity_" + method + ".csv"),
                      "sample,radius,sens_max\n" + sweep[method]);
    }
  }
  if (capable.empty() && !outputs.empty()) {
    spdlog::error("every requested method needs a capability the model lacks");
    return kExitCapability;
  }
  return kExitOk;
}

int cmd_cleverhans(const RunConfig& c) {
  const auto model = open_model(c.model);
  const auto records = select_samples(c, c.dataset.split, c.dataset.max_samples);
  std::vector<CleverHansSample> samples;
  for (const SampleRecord& r : records) {
    samples.push_back({r.sample_id(), r.image, label_of(r, c.train.label), r.cf_mask});
  }
  if (c.cleverhans_method == "oracle") {
    config_error("oracle is not a meaningful Clever Hans explainer");
  }
  const Explainer explainer = explainer_for(c, c.cleverhans_method, std::nullopt);
  std::vector<SaliencyMap> maps;
  std::vector<SampleDiagnostics> values =
      clever_hans_metrics(*model, explainer, samples, c.criteria, c.workers, &maps);
  const fs::path maps_dir = c.output_dir / "maps";
  ensure_dir(maps_dir);
  for (SampleDiagnostics& d : values) {
    d.saliency_path = "maps/" + d.sample_id + "_" + c.cleverhans_method + ".sbsm";
  }
  const auto findings = filter_clever_hans(values, c.criteria);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < values.size(); ++i) index[values[i].sample_id] = i;
  for (const CleverHansFinding& f : findings) {
    const SaliencyMap& m = maps[index.at(f.sample_id)];
    write_saliency_map(c.output_dir / f.saliency_path, m);
    fs::path pgm = c.output_dir / f.saliency_path;
    write_saliency_pgm(pgm.replace_extension(".pgm"), m);
  }
  std::string csv = "sample_id,class,confidence,localization,faithfulness\n";
  for (const SampleDiagnostics& d : values) {
    csv += d.sample_id + "," + std::to_string(d.class_index) + "," +
           format_value(d.confidence) + "," + format_value(d.localization) + "," +
           format_value(d.faithfulness) + "\n";
  }
  write_text_file(c.output_dir / "diagnostics.csv", csv);
  write_findings(c.output_dir, findings, c.criteria);
  spdlog::info("{} Clever Hans findings among {} samples", findings.size(), samples.size());
  std::printf("findings=%zu samples=%zu\n", findings.size(), samples.size());
  return kExitOk;
}

int cmd_bridge_check(const RunConfig& c) {
  if (!c.model.bridge) config_error("model.bridge is required for bridge-check");
  BridgedModel bridged(*c.model.bridge);
  nlohmann::ordered_json report;
  report["protocol"] = std::string(kBridgeProtocol);
  report["model_id"] = bridged.model_id();
  report["num_classes"] = bridged.num_classes();
  report["input_shape"] = bridged.input_shape();
  report["capabilities"] = bridged.capabilities().names();

  std::unique_ptr<MicroCnn> reference;
  if (c.reference_model) reference = std::make_unique<MicroCnn>(MicroCnn::load(*c.reference_model));
  Rng rng(c.seed);
  double max_prob_err = 0.0, max_grad_err = 0.0, max_sum_err = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < c.bridge_check_samples; ++i) {
    Tensor image(bridged.input_shape());
    for (float& v : image.values()) v = static_cast<float>(rng.uniform());
    const std::vector<float> p = bridged.predict(image);
    double sum = 0.0;
    for (float v : p) sum += v;
    max_sum_err = std::max(max_sum_err, std::abs(sum - 1.0));
    if (!reference) continue;
    const std::vector<float> q = reference->predict(image);
    for (std::size_t k = 0; k < p.size(); ++k) {
      max_prob_err = std::max(max_prob_err, std::abs(static_cast<double>(p[k]) - q[k]));
    }
    if (bridged.capabilities().has(Capability::kInputGrad)) {
      const std::size_t cls = i % bridged.num_classes();
      const Tensor g = bridged.input_gradient(image, cls);
      const Tensor h = reference->input_gradient(image, cls);
      for (std::size_t k = 0; k < g.size(); ++k) {
        max_grad_err = std::max(max_grad_err, std::abs(static_cast<double>(g[k]) - h[k]));
      }
    }
  }
  report["samples"] = c.bridge_check_samples;
  report["max_probability_sum_error"] = max_sum_err;
  ok = ok && max_sum_err <= 1e-4;
  if (reference) {
    report["max_predict_abs_error"] = max_prob_err;
    report["max_gradient_abs_error"] = max_grad_err;
    ok = ok && max_prob_err <= 1e-5 && max_grad_err <= 1e-4;
  }

  // An unknown op must come back as a structured error with the same id.
  const std::string reply = bridged.raw_request(R"({"id":999999,"op":"no_such_op"})");
  bool structured = false;
  try {
    const json j = json::parse(reply);
    structured = j.at("id").get<std::uint64_t>() == 999999 && !j.at("ok").get<bool>() &&
                 j.at("error").at("code").is_string();
  } catch (const json::exception&) {
  }
  report["unknown_op_structured_error"] = structured;
  ok = ok && structured;
  report["conformant"] = ok;
  ensure_dir(c.output_dir);
  write_text_file(c.output_dir / "bridge_check.json", report.dump(2) + "\n");
  std::printf("%s\n", report.dump(2).c_str());
  return ok ? kExitOk : kExitFailure;
}

}  // namespace sbench
