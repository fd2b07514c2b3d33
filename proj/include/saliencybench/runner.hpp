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

#ifndef SALIENCYBENCH_RUNNER_HPP_
#define SALIENCYBENCH_RUNNER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "saliencybench/bridge_client.hpp"
#include "saliencybench/diagnostics.hpp"
#include "saliencybench/error.hpp"
#include "saliencybench/metrics.hpp"
#include "saliencybench/micro_cnn.hpp"
#include "saliencybench/model.hpp"
#include "saliencybench/saliency.hpp"
#include "saliencybench/synthetic_bam.hpp"
#include "saliencybench/trainer.hpp"

namespace sbench {

// Process exit codes of the sbench tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCapability = 3;
inline constexpr int kExitIo = 4;

int exit_code_for(ErrorCode code);

enum class LabelKind { kObject, kScene };

struct DatasetSection {
  std::filesystem::path path;
  std::optional<GeneratorConfig> generate;  // dataset-gen input
  std::string name;                         // defaults to the folder name
  std::string split = "val";                // "train" | "val" | "all"
  std::size_t max_samples = 0;              // 0 = every selected sample
};

struct ModelSection {
  std::optional<std::filesystem::path> path;
  std::optional<BridgeOptions> bridge;
};

struct TrainSection {
  TrainOptions options;
  ArchitectureSpec arch;
  LabelKind label = LabelKind::kObject;
  std::optional<std::string> model_id;
};

struct MetricParams {
  double iosr_theta = kDefaultIosrThreshold;
  std::size_t insertion_steps = 100;
  bool insertion_blur = true;       // false: constant reference
  float insertion_constant = 0.0f;
  double sensitivity_radius = kDefaultSensitivityRadius;
  std::size_t sensitivity_samples = 10;
  std::vector<double> sweep_radii;  // empty: no sweep curves
  std::size_t intgrad_steps = 64;
  MaskSpec mask;
  std::optional<OcclusionSpec> occlusion;
  std::optional<std::string> layer;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path output_dir = "sbench-out";
  DatasetSection dataset;
  ModelSection model;                     // classifier with train.label labels
  std::optional<ModelSection> scene_model;  // needed by mcs / mcr / idr
  TrainSection train;
  std::vector<std::string> methods;
  std::vector<std::string> metrics;
  MetricParams params;
  CleverHansCriteria criteria;
  std::string cleverhans_method = "gradcam";
  std::size_t bridge_check_samples = 20;
  std::optional<std::filesystem::path> reference_model;  // bridge-check
};

inline const std::vector<std::string>& per_sample_metric_names() {
  static const std::vector<std::string> names{"iauc", "pg", "iosr", "sco", "cs", "sens_max"};
  return names;
}
inline const std::vector<std::string>& dataset_metric_names() {
  static const std::vector<std::string> names{"gco", "mcs", "mcr", "idr"};
  return names;
}
// The seven explainers plus the "random" and "oracle" (ground-truth mask)
// baselines.
bool is_known_method(const std::string& name);

// Parses the JSON run configuration. Relative paths are resolved against
// base_dir. Throws kConfigInvalid.
RunConfig parse_run_config(const std::string& text,
                           const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);

struct CliOverrides {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
};
void apply_overrides(RunConfig& config, const CliOverrides& overrides);

// Opens the configured classifier (model file or bridge). Throws
// kConfigInvalid when neither is given.
std::unique_ptr<Model> open_model(const ModelSection& section);

// Subcommands. Each returns a process exit code; errors that abort the
// whole command propagate as Error.
int cmd_dataset_gen(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_explain(const RunConfig& config);
int cmd_evaluate(const RunConfig& config);
int cmd_cleverhans(const RunConfig& config);
int cmd_bridge_check(const RunConfig& config);

}  // namespace sbench

#endif  // SALIENCYBENCH_RUNNER_HPP_
