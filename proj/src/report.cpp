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

#include "saliencybench/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "saliencybench/error.hpp"

namespace sbench {
namespace {

// Fields never contain commas or quotes in practice; quote defensively.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::string format_value(std::optional<double> value) {
  if (!value) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", *value == 0.0 ? 0.0 : *value);
  return buf;
}

std::string rows_to_csv(const std::vector<MetricRow>& rows) {
  std::string out = std::string(kMetricCsvHeader) + "\n";
  for (const MetricRow& r : rows) {
    out += csv_field(r.dataset) + ',' + csv_field(r.model_id) + ',' +
           csv_field(r.method) + ',' + csv_field(r.metric) + ',' +
           csv_field(r.scope) + ',' + format_value(r.value) + ',' +
           std::to_string(r.n_included) + ',' + std::to_string(r.n_excluded) +
           ',' + std::to_string(r.seed) + '\n';
  }
  return out;
}

std::string rows_to_json(const std::vector<MetricRow>& rows) {
  // Values go through format_value so the JSON and CSV agree digit for digit.
  std::string out = "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const MetricRow& r = rows[i];
    nlohmann::ordered_json j;
    j["dataset"] = r.dataset;
    j["model_id"] = r.model_id;
    j["method"] = r.method;
    j["metric"] = r.metric;
    j["scope"] = r.scope;
    j["value"] = nullptr;
    j["n_included"] = r.n_included;
    j["n_excluded"] = r.n_excluded;
    j["seed"] = r.seed;
    std::string text = j.dump();
    if (r.value) {
      const std::string key = "\"value\":null";
      text.replace(text.find(key), key.size(), "\"value\":" + format_value(r.value));
    }
    out += "  " + text + (i + 1 < rows.size() ? ",\n" : "\n");
  }
  return out + "]\n";
}

std::vector<MetricRow> rows_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricCsvHeader) {
    throw Error(ErrorCode::kFormat, "not a metric CSV (bad header)");
  }
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw Error(ErrorCode::kFormat, "bad CSV row: " + line);
    MetricRow r{f[0], f[1], f[2], f[3], f[4], std::nullopt, 0, 0, 0};
    try {
      if (!f[5].empty()) r.value = std::stod(f[5]);
      r.n_included = std::stoull(f[6]);
      r.n_excluded = std::stoull(f[7]);
      r.seed = std::stoull(f[8]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormat, "bad number in CSV row: " + line);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace sbench
