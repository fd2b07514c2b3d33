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

#ifndef SALIENCYBENCH_REPORT_HPP_
#define SALIENCYBENCH_REPORT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sbench {

// One CSV/JSON row. scope is "sample:<id>" or "aggregate". Samples that were
// excluded (undefined metric, failed explainer) carry no value, n_included 0
// and n_excluded 1.
struct MetricRow {
  std::string dataset;
  std::string model_id;
  std::string method;
  std::string metric;
  std::string scope;
  std::optional<double> value;
  std::size_t n_included = 0;
  std::size_t n_excluded = 0;
  std::uint64_t seed = 0;

  bool is_aggregate() const { return scope == "aggregate"; }
};

inline constexpr const char* kMetricCsvHeader =
    "dataset,model_id,method,metric,scope,value,n_included,n_excluded,seed";

// %.9g; empty for a missing value.
std::string format_value(std::optional<double> value);

std::string rows_to_csv(const std::vector<MetricRow>& rows);
std::string rows_to_json(const std::vector<MetricRow>& rows);
std::vector<MetricRow> rows_from_csv(const std::string& text);

// Writes the whole string or throws kIo.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace sbench

#endif  // SALIENCYBENCH_REPORT_HPP_
