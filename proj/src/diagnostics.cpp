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

#include "saliencybench/diagnostics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "json.hpp"
#include "saliencybench/error.hpp"
#include "saliencybench/image_ops.hpp"
#include "saliencybench/parallel.hpp"

namespace sbench {

const char* localization_mode_name(LocalizationMode mode) {
  return mode == LocalizationMode::kIosr ? "iosr" : "pg_hit";
}

void CleverHansCriteria::validate() const {
  if (!(confidence > 0.0 && confidence <= 1.0)) {
    // 1.0 is allowed and simply selects nothing.
    throw Error(ErrorCode::kInvalidArgument, "confidence threshold must be in (0,1]");
  }
  if (!(faithfulness > 0.0 && faithfulness < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "faithfulness threshold must be in (0,1)");
  }
  if (!(localization >= 0.0 && localization <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "localization threshold must be in [0,1]");
  }
  if (!(iosr_theta > 0.0 && iosr_theta < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "IoSR theta must be in (0,1)");
  }
  if (insertion_steps < 1) {
    throw Error(ErrorCode::kInvalidArgument, "insertion steps must be >= 1");
  }
}

std::vector<SampleDiagnostics> clever_hans_metrics(const Model& model,
                                                   const Explainer& explainer,
                                                   std::span<const CleverHansSample> samples,
                                                   const CleverHansCriteria& criteria,
                                                   std::size_t workers,
                                                   std::vector<SaliencyMap>* maps) {
  criteria.validate();
  for (const CleverHansSample& s : samples) {
    if (!s.mask) throw Error(ErrorCode::kMissingMasks, "sample " + s.id + " has no mask");
  }
  std::vector<SampleDiagnostics> out(samples.size());
  if (maps) maps->assign(samples.size(), SaliencyMap{});
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    const CleverHansSample& s = samples[i];
    SampleDiagnostics& d = out[i];
    d.sample_id = s.id;
    d.class_index = s.label;
    d.confidence = model.predict(s.image)[s.label];
    SaliencyMap map = explainer(model, s.image, s.label);
    if (criteria.mode == LocalizationMode::kPointingHit) {
      d.localization = pointing_game(map.scores, *s.mask).hit ? 1.0 : 0.0;
    } else {
      try {
        d.localization = iosr(map.scores, *s.mask, criteria.iosr_theta);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kEmptySalientArea) throw;
      }
    }
    d.faithfulness = insertion_auc(model, s.image, s.label, map.scores,
                                   insertion_reference_blur(s.image),
                                   std::min(criteria.insertion_steps,
                                            map.scores.size()))
                         .iauc;
    if (maps) (*maps)[i] = std::move(map);
  });
  return out;
}

std::vector<CleverHansFinding> filter_clever_hans(std::span<const SampleDiagnostics> values,
                                                  const CleverHansCriteria& criteria) {
  std::vector<CleverHansFinding> out;
  std::set<std::string> seen;
  for (const SampleDiagnostics& d : values) {
    if (!d.localization) continue;
    if (!(d.confidence > criteria.confidence)) continue;
    if (!(*d.localization < criteria.localization)) continue;
    if (!(d.faithfulness > criteria.faithfulness)) continue;
    if (!seen.insert(d.sample_id).second) continue;
    out.push_back({d.sample_id, d.class_index, d.confidence, *d.localization,
                   d.faithfulness, d.saliency_path});
  }
  std::sort(out.begin(), out.end(), [](const CleverHansFinding& a, const CleverHansFinding& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.sample_id < b.sample_id;
  });
  return out;
}

std::vector<CleverHansFinding> detect_clever_hans(const Model& model,
                                                  const Explainer& explainer,
                                                  std::span<const CleverHansSample> samples,
                                                  const CleverHansCriteria& criteria,
                                                  std::size_t workers) {
  const auto values = clever_hans_metrics(model, explainer, samples, criteria, workers);
  return filter_clever_hans(values, criteria);
}

void write_findings(const std::filesystem::path& dir,
                    std::span<const CleverHansFinding> findings,
                    const CleverHansCriteria& criteria) {
  std::string jsonl;
  std::string csv =
      "sample_id,class,confidence,localization,faithfulness,saliency_path\n";
  for (const CleverHansFinding& f : findings) {
    nlohmann::ordered_json j;
    j["sample_id"] = f.sample_id;
    j["class"] = f.class_index;
    j["confidence"] = f.confidence;
    j["localization"] = f.localization;
    j["localization_metric"] = localization_mode_name(criteria.mode);
    j["faithfulness"] = f.faithfulness;
    j["saliency_path"] = f.saliency_path;
    jsonl += j.dump() + "\n";
    csv += f.sample_id + ',' + std::to_string(f.class_index) + ',' +
           format_value(f.confidence) + ',' + format_value(f.localization) + ',' +
           format_value(f.faithfulness) + ',' + f.saliency_path + '\n';
  }
  nlohmann::ordered_json c;
  c["theta_c"] = criteria.confidence;
  c["theta_l"] = criteria.localization;
  c["localization_metric"] = localization_mode_name(criteria.mode);
  c["theta_f"] = criteria.faithfulness;
  c["iosr_theta"] = criteria.iosr_theta;
  c["insertion_steps"] = criteria.insertion_steps;
  c["findings"] = findings.size();
  write_text_file(dir / "findings.jsonl", jsonl);
  write_text_file(dir / "findings.csv", csv);
  write_text_file(dir / "criteria.json", c.dump(2) + "\n");
}

std::vector<MetricRow> aggregate_report(std::span<const MetricRow> rows) {
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  struct Acc {
    double sum = 0.0;
    std::size_t terms = 0;
    std::size_t groups = 0;
    std::size_t included = 0;
    std::size_t excluded = 0;
    std::uint64_t seed = 0;
  };
  std::map<Key, Acc> groups;
  std::vector<Key> first_seen;
  std::size_t per_sample = 0;
  for (const MetricRow& r : rows) {
    if (r.is_aggregate()) continue;
    ++per_sample;
    const Key key{r.dataset, r.model_id, r.method, r.metric};
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) {
      first_seen.push_back(key);
      it->second.seed = r.seed;
    }
    if (r.value && r.n_included > 0) {
      it->second.sum += *r.value;
      it->second.included += 1;
    } else {
      it->second.excluded += std::max<std::size_t>(1, r.n_excluded);
    }
  }
  if (per_sample == 0) throw Error(ErrorCode::kEmptyReport, "no per-sample rows");

  std::vector<MetricRow> out;
  // Grand means average the group means of each (method, metric); their
  // counts are totals over the groups.
  std::map<std::pair<std::string, std::string>, Acc> grand;
  std::vector<std::pair<std::string, std::string>> grand_order;
  for (const Key& key : first_seen) {
    const Acc& a = groups.at(key);
    const auto& [dataset, model, method, metric] = key;
    MetricRow row{dataset, model, method, metric, "aggregate", std::nullopt,
                  a.included, a.excluded, a.seed};
    if (a.included > 0) row.value = a.sum / static_cast<double>(a.included);
    out.push_back(row);
    auto [g, fresh] = grand.try_emplace({method, metric});
    if (fresh) {
      grand_order.push_back({method, metric});
      g->second.seed = a.seed;
    }
    if (row.value) {
      g->second.sum += *row.value;
      g->second.terms += 1;
    }
    g->second.included += a.included;
    g->second.groups += 1;
    g->second.excluded += a.excluded;
  }
  for (const auto& key : grand_order) {
    const Acc& g = grand.at(key);
    if (g.groups < 2) continue;
    MetricRow row{"*", "*", key.first, key.second, "aggregate", std::nullopt,
                  g.included, g.excluded, g.seed};
    if (g.terms > 0) row.value = g.sum / static_cast<double>(g.terms);
    out.push_back(row);
  }
  return out;
}

}  // namespace sbench
