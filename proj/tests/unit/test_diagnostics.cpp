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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"
#include "oracles.hpp"
#include "saliencybench/diagnostics.hpp"
#include "test_util.hpp"

namespace sbench {
namespace {

std::vector<SampleDiagnostics> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SampleDiagnostics> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    SampleDiagnostics& d = out[i];
    d.sample_id = "s" + std::to_string(i);
    d.class_index = rng.index(4);
    d.confidence = rng.uniform(0.5, 1.0);
    if (!rng.bernoulli(0.1)) d.localization = rng.uniform(0.0, 1.0);
    d.faithfulness = rng.uniform(0.0, 1.0);
  }
  return out;
}

std::vector<oracle::CandidateValues> to_candidates(const std::vector<SampleDiagnostics>& v) {
  std::vector<oracle::CandidateValues> out;
  for (const auto& d : v) {
    out.push_back({d.sample_id, d.confidence, d.localization.has_value(),
                   d.localization.value_or(0.0), d.faithfulness});
  }
  return out;
}

std::set<std::string> ids(const std::vector<CleverHansFinding>& f) {
  std::set<std::string> out;
  for (const auto& x : f) out.insert(x.sample_id);
  return out;
}

TEST(CleverHansFilter, MatchesSetIntersectionOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto values = random_values(50, seed);
    for (double tc : {0.6, 0.8, 0.9}) {
      for (double tl : {0.2, 0.3, 0.6}) {
        for (double tf : {0.3, 0.5, 0.7}) {
          CleverHansCriteria c;
          c.confidence = tc;
          c.localization = tl;
          c.faithfulness = tf;
          EXPECT_EQ(ids(filter_clever_hans(values, c)),
                    oracle::triple_filter(to_candidates(values), tc, tl, tf));
        }
      }
    }
  }
}

TEST(CleverHansFilter, FullConfidenceSelectsNothing) {
  auto values = random_values(50, 1);
  values[3].confidence = 1.0;
  CleverHansCriteria c;
  c.confidence = 1.0;
  EXPECT_TRUE(filter_clever_hans(values, c).empty());
}

TEST(CleverHansFilter, SortedAndDeduplicated) {
  auto values = random_values(50, 2);
  CleverHansCriteria c;
  c.confidence = 0.5;
  c.localization = 0.8;
  c.faithfulness = 0.2;
  const auto base = filter_clever_hans(values, c);
  ASSERT_GT(base.size(), 3u);
  for (std::size_t i = 1; i < base.size(); ++i) {
    EXPECT_GE(base[i - 1].confidence, base[i].confidence);
  }
  auto shuffled = values;
  std::reverse(shuffled.begin(), shuffled.end());
  shuffled.push_back(shuffled.front());
  const auto again = filter_clever_hans(shuffled, c);
  ASSERT_EQ(again.size(), base.size());
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_EQ(again[i].sample_id, base[i].sample_id);

  // Ties on confidence fall back to sample id.
  std::vector<SampleDiagnostics> tie(2);
  tie[0] = {"b", 0, 0.95, 0.1, 0.9, ""};
  tie[1] = {"a", 0, 0.95, 0.1, 0.9, ""};
  const auto t = filter_clever_hans(tie, CleverHansCriteria{});
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].sample_id, "a");
}

TEST(CleverHansFilter, TighteningNeverAdds) {
  const auto values = random_values(200, 3);
  CleverHansCriteria loose;
  loose.confidence = 0.6;
  loose.localization = 0.7;
  loose.faithfulness = 0.2;
  auto prev = ids(filter_clever_hans(values, loose));
  for (int step = 1; step <= 5; ++step) {
    CleverHansCriteria tight = loose;
    tight.confidence = 0.6 + 0.07 * step;
    tight.localization = 0.7 - 0.1 * step;
    tight.faithfulness = 0.2 + 0.1 * step;
    const auto cur = ids(filter_clever_hans(values, tight));
    EXPECT_TRUE(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end())) << step;
    prev = cur;
  }
}

TEST(CleverHansCriteria, Validation) {
  CleverHansCriteria c;
  EXPECT_NO_THROW(c.validate());
  c.confidence = 0.0;
  EXPECT_SBENCH_ERROR(c.validate(), ErrorCode::kInvalidArgument);
  c = {};
  c.faithfulness = 1.0;
  EXPECT_SBENCH_ERROR(c.validate(), ErrorCode::kInvalidArgument);
  c = {};
  c.localization = 1.5;
  EXPECT_SBENCH_ERROR(c.validate(), ErrorCode::kInvalidArgument);
}

// Class 0 is driven by the contrast between two central pixels, which the
// reference blur removes; the explainer points there and the mask covers a
// corner.
struct ShortcutSetup {
  static constexpr std::size_t kA = 12 * 24 + 12, kB = kA + 1;
  FunctionModel model{"shortcut", {1, 24, 24}, 2, [](const Tensor& x) {
                        return softmax(std::vector<float>{20.0f * (x[kA] - x[kB]) - 5.0f, 0.0f});
                      }};
  Explainer explainer = [](const Model&, const Tensor&, std::size_t c) {
    SaliencyMap m;
    m.scores = Tensor({24, 24});
    m.scores[kA] = 1.0f;
    m.scores[kB] = 0.5f;
    m.class_index = c;
    return m;
  };
  GroundTruthMask mask = [] {
    Tensor t({24, 24});
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 6; ++x) t(y, x) = 1.0f;
    return GroundTruthMask(t);
  }();
};

TEST(CleverHansDetect, FindsShortcutSample) {
  ShortcutSetup s;
  Tensor on({1, 24, 24}), off({1, 24, 24});
  on[ShortcutSetup::kA] = 1.0f;
  std::vector<CleverHansSample> samples = {{"on", on, 0, s.mask}, {"off", off, 0, s.mask}};
  std::vector<SaliencyMap> maps;
  const auto values = clever_hans_metrics(s.model, s.explainer, samples, {}, 1, &maps);
  ASSERT_EQ(values.size(), 2u);
  EXPECT_EQ(maps.size(), 2u);
  EXPECT_GT(values[0].confidence, 0.99);
  EXPECT_LT(values[1].confidence, 0.01);
  ASSERT_TRUE(values[0].localization.has_value());
  EXPECT_EQ(*values[0].localization, 0.0);
  EXPECT_GT(values[0].faithfulness, 0.9);

  const auto findings = detect_clever_hans(s.model, s.explainer, samples, {}, 2);
  ASSERT_EQ(findings.size(), 1u);
  EXPECT_EQ(findings[0].sample_id, "on");
  CleverHansCriteria pg;
  pg.mode = LocalizationMode::kPointingHit;
  EXPECT_EQ(detect_clever_hans(s.model, s.explainer, samples, pg).size(), 1u);

  samples[1].mask.reset();
  EXPECT_SBENCH_ERROR(detect_clever_hans(s.model, s.explainer, samples, {}),
                      ErrorCode::kMissingMasks);
}

TEST(CleverHansDetect, WritesFindings) {
  testing::TempDir dir("findings");
  std::vector<CleverHansFinding> f = {{"x", 1, 0.97, 0.1, 0.8, "maps/x.sbsm"}};
  write_findings(dir.path(), f, CleverHansCriteria{});
  const auto jsonl = read_text_file(dir.path() / "findings.jsonl");
  const auto j = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
  EXPECT_EQ(j["sample_id"], "x");
  EXPECT_EQ(j["localization_metric"], "iosr");
  const auto crit = nlohmann::json::parse(read_text_file(dir.path() / "criteria.json"));
  EXPECT_EQ(crit["findings"], 1);
  EXPECT_EQ(crit["theta_c"], 0.9);
  const auto csv = read_text_file(dir.path() / "findings.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);

  write_findings(dir.path(), {}, CleverHansCriteria{});
  EXPECT_EQ(read_text_file(dir.path() / "findings.jsonl"), "");
}

MetricRow row(std::string method, std::string metric, std::optional<double> v,
              std::string model = "m") {
  return {"d", std::move(model), std::move(method), std::move(metric), "sample", v,
          v ? 1u : 0u, v ? 0u : 1u, 7};
}

TEST(Aggregate, SingleRowAndMean) {
  const std::vector<MetricRow> one = {row("gradcam", "pg", 0.25)};
  const auto a = aggregate_report(one);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].scope, "aggregate");
  EXPECT_EQ(*a[0].value, 0.25);
  EXPECT_EQ(a[0].n_included, 1u);
  EXPECT_EQ(a[0].seed, 7u);

  const std::vector<MetricRow> two = {row("gradcam", "pg", 0.2), row("gradcam", "pg", 0.4),
                                      row("gradcam", "pg", std::nullopt)};
  const auto b = aggregate_report(two);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NEAR(*b[0].value, 0.3, 1e-15);
  EXPECT_EQ(b[0].n_included, 2u);
  EXPECT_EQ(b[0].n_excluded, 1u);
}

TEST(Aggregate, EmptyAndAggregateOnlyInputsFail) {
  EXPECT_SBENCH_ERROR(aggregate_report({}), ErrorCode::kEmptyReport);
  MetricRow agg = row("gradcam", "pg", 0.5);
  agg.scope = "aggregate";
  const std::vector<MetricRow> rows = {agg};
  EXPECT_SBENCH_ERROR(aggregate_report(rows), ErrorCode::kEmptyReport);
}

TEST(Aggregate, AllExcludedGivesEmptyValue) {
  const std::vector<MetricRow> rows = {row("rise", "iosr", std::nullopt),
                                       row("rise", "iosr", std::nullopt)};
  const auto a = aggregate_report(rows);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_FALSE(a[0].value.has_value());
  EXPECT_EQ(a[0].n_excluded, 2u);
}

TEST(Aggregate, TenThousandRowsMatchStreamingMean) {
  Rng rng(11);
  const char* methods[] = {"gradient", "gradcam", "rise"};
  const char* metrics[] = {"pg", "iosr", "iauc"};
  std::vector<MetricRow> rows;
  std::map<std::string, std::pair<long double, std::size_t>> want;
  for (std::size_t i = 0; i < 10000; ++i) {
    const std::string method = methods[rng.index(3)], metric = metrics[rng.index(3)];
    const std::string model = rng.bernoulli(0.5) ? "a" : "b";
    const double v = rng.uniform(-1.0, 1.0) * 1e3;
    rows.push_back(row(method, metric, v, model));
    auto& w = want[model + "/" + method + "/" + metric];
    w.first += v;
    ++w.second;
  }
  const auto agg = aggregate_report(rows);
  std::size_t checked = 0, grand = 0;
  for (const MetricRow& r : agg) {
    if (r.model_id == "*") {
      ++grand;
      const auto& a = want.at("a/" + r.method + "/" + r.metric);
      const auto& b = want.at("b/" + r.method + "/" + r.metric);
      const double g = static_cast<double>((a.first / a.second + b.first / b.second) / 2);
      EXPECT_NEAR(*r.value, g, 1e-9);
      EXPECT_EQ(r.n_included, a.second + b.second);
      continue;
    }
    const auto& w = want.at(r.model_id + "/" + r.method + "/" + r.metric);
    EXPECT_NEAR(*r.value, static_cast<double>(w.first / w.second), 1e-9);
    EXPECT_EQ(r.n_included, w.second);
    ++checked;
  }
  EXPECT_EQ(checked, want.size());
  EXPECT_EQ(grand, 9u);
}

TEST(Aggregate, PreservesFirstSeenOrder) {
  const std::vector<MetricRow> rows = {row("rise", "pg", 1.0), row("gradient", "pg", 0.0),
                                       row("rise", "pg", 0.0)};
  const auto a = aggregate_report(rows);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].method, "rise");
  EXPECT_EQ(a[1].method, "gradient");
}

}  // namespace
}  // namespace sbench
