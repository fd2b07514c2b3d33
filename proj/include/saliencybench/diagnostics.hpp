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

#ifndef SALIENCYBENCH_DIAGNOSTICS_HPP_
#define SALIENCYBENCH_DIAGNOSTICS_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saliencybench/metrics.hpp"
#include "saliencybench/model.hpp"
#include "saliencybench/report.hpp"
#include "saliencybench/saliency.hpp"

namespace sbench {

enum class LocalizationMode { kIosr, kPointingHit };

const char* localization_mode_name(LocalizationMode mode);

// A sample is flagged when f_c > confidence, M_loc < localization and
// iAUC > faithfulness. In kPointingHit mode M_loc is 1 for a hit, 0 for a
// miss.
struct CleverHansCriteria {
  double confidence = 0.9;
  double localization = 0.3;
  LocalizationMode mode = LocalizationMode::kIosr;
  double faithfulness = 0.5;
  double iosr_theta = kDefaultIosrThreshold;
  std::size_t insertion_steps = 100;

  // Throws kInvalidArgument.
  void validate() const;
};

struct CleverHansSample {
  std::string id;
  Tensor image;
  std::size_t label = 0;
  std::optional<GroundTruthMask> mask;
};

// Per-sample values the filter works on. localization is empty when IoSR is
// undefined for the map; such samples are never flagged.
struct SampleDiagnostics {
  std::string sample_id;
  std::size_t class_index = 0;
  double confidence = 0.0;
  std::optional<double> localization;
  double faithfulness = 0.0;
  std::string saliency_path;
};

struct CleverHansFinding {
  std::string sample_id;
  std::size_t class_index = 0;
  double confidence = 0.0;
  double localization = 0.0;
  double faithfulness = 0.0;
  std::string saliency_path;
};

// Explains the labelled class of every sample and scores it. The iAUC
// reference is the blurred image. Throws kMissingMasks when a sample has no
// mask. The result does not depend on `workers`.
std::vector<SampleDiagnostics> clever_hans_metrics(const Model& model,
                                                   const Explainer& explainer,
                                                   std::span<const CleverHansSample> samples,
                                                   const CleverHansCriteria& criteria,
                                                   std::size_t workers = 1,
                                                   std::vector<SaliencyMap>* maps = nullptr);

// The triple filter. Duplicate sample ids are kept once; output is sorted by
// descending confidence, then sample id.
std::vector<CleverHansFinding> filter_clever_hans(std::span<const SampleDiagnostics> values,
                                                  const CleverHansCriteria& criteria);

std::vector<CleverHansFinding> detect_clever_hans(const Model& model,
                                                  const Explainer& explainer,
                                                  std::span<const CleverHansSample> samples,
                                                  const CleverHansCriteria& criteria,
                                                  std::size_t workers = 1);

// findings.jsonl plus findings.csv under dir.
void write_findings(const std::filesystem::path& dir,
                    std::span<const CleverHansFinding> findings,
                    const CleverHansCriteria& criteria);

// Mean of every (dataset, model_id, method, metric) group of per-sample rows,
// followed by grand means over models and datasets ("*" in those columns)
// for every (method, metric) seen in more than one group.
// Aggregate rows in the input are ignored. Excluded samples are counted in
// n_excluded. Throws kEmptyReport when no per-sample row is given.
std::vector<MetricRow> aggregate_report(std::span<const MetricRow> rows);

}  // namespace sbench

#endif  // SALIENCYBENCH_DIAGNOSTICS_HPP_
