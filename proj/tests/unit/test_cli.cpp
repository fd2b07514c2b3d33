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

#include <sys/wait.h>

#include <cstdlib>
#include <map>

#include "json.hpp"
#include "saliencybench/image_ops.hpp"
#include "saliencybench/report.hpp"
#include "saliencybench/runner.hpp"
#include "test_util.hpp"

#ifndef SBENCH_PATH
#error "SBENCH_PATH must point at the sbench executable"
#endif
#ifndef FAKE_BRIDGE_PATH
#error "FAKE_BRIDGE_PATH must point at the fake bridge executable"
#endif

namespace sbench {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// One small dataset and two untrained-but-seeded models shared by all tests.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("cli");
    const json gen = base();
    RunConfig c = parse_run_config(gen.dump(), root());
    ASSERT_EQ(cmd_dataset_gen(c), kExitOk);
    for (const char* label : {"object", "scene"}) {
      json t = base();
      t["model"] = {{"path", std::string("models/") + label + ".bin"}};
      t["train"] = {{"epochs", 2}, {"label", label}, {"conv_channels", {4, 8}},
                    {"hidden_units", 16}};
      t["output_dir"] = std::string("train_") + label;
      ASSERT_EQ(cmd_train(parse_run_config(t.dump(), root())), kExitOk);
    }
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static const fs::path& root() { return dir_->path(); }

  static json base() {
    return {{"seed", 3},
            {"dataset",
             {{"path", "data"},
              {"generate",
               {{"n_object_classes", 3},
                {"n_scene_classes", 3},
                {"image_size", 32},
                {"samples_per_combined_label", 6}}}}}};
  }

  static json with_model(const std::string& out) {
    json j = base();
    j["model"] = {{"path", "models/object.bin"}};
    j["train"] = {{"label", "object"}};
    j["output_dir"] = out;
    return j;
  }

  static RunConfig parse(const json& j) { return parse_run_config(j.dump(), root()); }

  static json bridge_model(const std::string& mode) {
    return {{"bridge",
             {{"command",
               {FAKE_BRIDGE_PATH, "--model", (root() / "models/object.bin").string(), "--mode",
                mode}}}}};
  }

  static testing::TempDir* dir_;
};

testing::TempDir* CliTest::dir_ = nullptr;

std::size_t count_ext(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

TEST_F(CliTest, DatasetGenWritesEverything) {
  EXPECT_EQ(count_ext(root() / "data/images", ".ppm"), 2u * 54);
  EXPECT_EQ(count_ext(root() / "data/masks", ".pgm"), 54u);
  EXPECT_TRUE(fs::exists(root() / "data/manifest.jsonl"));
  EXPECT_TRUE(fs::exists(root() / "data/config.json"));
}

TEST_F(CliTest, TrainReportsAndIsDeterministic) {
  const auto report = json::parse(read_text_file(root() / "train_object/train_report.json"));
  EXPECT_EQ(report["label"], "object");
  EXPECT_EQ(report["epoch_losses"].size(), 2u);
  EXPECT_EQ(report["train_samples"].get<std::size_t>() + report["val_samples"].get<std::size_t>(),
            54u);
  EXPECT_EQ(report["val_samples"], 54u / 5);

  json t = base();
  t["model"] = {{"path", "models/zero.bin"}};
  t["train"] = {{"epochs", 0}, {"conv_channels", {4, 8}}, {"hidden_units", 16}};
  t["output_dir"] = "train_zero";
  ASSERT_EQ(cmd_train(parse(t)), kExitOk);
  const MicroCnn zero = MicroCnn::load(root() / "models/zero.bin");
  ArchitectureSpec arch{{3, 32, 32}, 3, {4, 8}, 16};
  const MicroCnn init = MicroCnn::reference(arch, 3);
  const Tensor img = testing::random_tensor({3, 32, 32}, 1);
  EXPECT_EQ(zero.predict(img), init.predict(img));

  t["model"] = {{"path", "models/object_again.bin"}};
  t["train"] = {{"epochs", 2}, {"label", "object"}, {"conv_channels", {4, 8}},
                {"hidden_units", 16}};
  ASSERT_EQ(cmd_train(parse(t)), kExitOk);
  EXPECT_EQ(read_text_file(root() / "models/object.bin"),
            read_text_file(root() / "models/object_again.bin"));
}

TEST_F(CliTest, ExplainAllMethods) {
  json j = with_model("explain_all");
  for (SaliencyMethod m : kAllMethods) j["methods"].push_back(method_name(m));
  j["params"] = {{"mask", {{"mask_count", 200}}}};
  ASSERT_EQ(cmd_explain(parse(j)), kExitOk);
  const fs::path maps = root() / "explain_all/maps";
  EXPECT_EQ(count_ext(maps, ".sbsm"), 21u);
  EXPECT_EQ(count_ext(maps, ".pgm"), 21u);
  for (const auto& e : fs::directory_iterator(maps)) {
    if (e.path().extension() != ".pgm") continue;
    const Tensor img = read_pnm(e.path());
    float lo = 1.0f, hi = 0.0f;
    for (float v : img.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    EXPECT_GE(lo, 0.0f);
    EXPECT_LE(hi, 1.0f);
  }
  const auto report = json::parse(read_text_file(root() / "explain_all/explain_report.json"));
  ASSERT_EQ(report.size(), 21u);
  for (const auto& e : report) EXPECT_EQ(e["status"], "OK") << e.dump();
}

TEST_F(CliTest, ExplainRecordsMissingCapability) {
  json j = with_model("explain_bridge");
  j["model"] = bridge_model("predict-only");
  j["methods"] = {"gradcam", "occlusion"};
  ASSERT_EQ(cmd_explain(parse(j)), kExitOk);
  const auto report = json::parse(read_text_file(root() / "explain_bridge/explain_report.json"));
  std::map<std::string, std::size_t> status;
  for (const auto& e : report) ++status[e["method"].get<std::string>() + ":" +
                                        e["status"].get<std::string>()];
  EXPECT_EQ(status["gradcam:CAPABILITY_MISSING"], 3u);
  EXPECT_EQ(status["occlusion:OK"], 3u);

  j["methods"] = {"gradcam", "gradient"};
  EXPECT_EQ(cmd_explain(parse(j)), kExitCapability);
}

TEST_F(CliTest, EvaluatePointingGameRows) {
  json j = with_model("eval_pg");
  j["dataset"]["split"] = "all";
  j["dataset"]["max_samples"] = 10;
  j["methods"] = {"gradcam"};
  j["metrics"] = {"pg"};
  ASSERT_EQ(cmd_evaluate(parse(j)), kExitOk);
  const auto rows = rows_from_csv(read_text_file(root() / "eval_pg/metrics.csv"));
  ASSERT_EQ(rows.size(), 11u);
  double sum = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(rows[i].scope.rfind("sample:", 0), 0u);
    ASSERT_TRUE(rows[i].value.has_value());
    sum += *rows[i].value;
  }
  EXPECT_TRUE(rows[10].is_aggregate());
  EXPECT_NEAR(*rows[10].value, sum / 10.0, 1e-8);
  EXPECT_EQ(rows[10].n_included, 10u);
  EXPECT_TRUE(fs::exists(root() / "eval_pg/metrics.json"));
  EXPECT_TRUE(fs::exists(root() / "eval_pg/run.json"));
}

TEST_F(CliTest, EvaluateIsWorkerCountIndependent) {
  json j = with_model("eval_w1");
  j["methods"] = {"gradient", "rise", "random", "oracle"};
  j["metrics"] = {"iauc", "pg", "iosr", "sco", "sens_max", "gco"};
  j["params"] = {{"mask", {{"mask_count", 100}}},
                 {"insertion_steps", 16},
                 {"sensitivity", {{"samples", 3}, {"radii", {0.0, 0.1, 0.2}}}}};
  j["workers"] = 1;
  ASSERT_EQ(cmd_evaluate(parse(j)), kExitOk);
  j["output_dir"] = "eval_w8";
  j["workers"] = 8;
  ASSERT_EQ(cmd_evaluate(parse(j)), kExitOk);
  for (const char* f : {"metrics.csv", "metrics.json", "curves/insertion_rise.csv",
                        "curves/sensitivity_gradient.csv"}) {
    EXPECT_EQ(read_text_file(root() / "eval_w1" / f), read_text_file(root() / "eval_w8" / f))
        << f;
  }
  // The sweep curves start at zero and never decrease.
  const std::string sweep = read_text_file(root() / "eval_w1/curves/sensitivity_gradient.csv");
  EXPECT_NE(sweep.find(",0,0\n"), std::string::npos);
}

TEST_F(CliTest, EvaluateDatasetLevelMetrics) {
  json j = with_model("eval_dataset");
  j["scene_model"] = {{"path", "models/scene.bin"}};
  j["methods"] = {"gradient", "random"};
  j["metrics"] = {"gco", "mcs", "mcr", "idr"};
  ASSERT_EQ(cmd_evaluate(parse(j)), kExitOk);
  const auto rows = rows_from_csv(read_text_file(root() / "eval_dataset/metrics.csv"));
  std::map<std::string, MetricRow> by;
  for (const MetricRow& r : rows) by[r.method + "/" + r.metric] = r;
  EXPECT_EQ(by.size(), 8u);
  ASSERT_TRUE(by.count("random/idr"));
  ASSERT_TRUE(by["random/idr"].value.has_value());
  EXPECT_GE(*by["random/idr"].value, 0.0);
  EXPECT_LE(*by["random/idr"].value, 1.0);
  EXPECT_EQ(by["gradient/idr"].n_included, 54u / 5);

  j.erase("scene_model");
  EXPECT_SBENCH_ERROR(cmd_evaluate(parse(j)), ErrorCode::kConfigInvalid);
}

TEST_F(CliTest, CleverHansFullConfidenceIsEmpty) {
  json j = with_model("ch_empty");
  j["cleverhans"] = {{"theta_c", 1.0}};
  ASSERT_EQ(cmd_cleverhans(parse(j)), kExitOk);
  EXPECT_EQ(read_text_file(root() / "ch_empty/findings.jsonl"), "");
  const auto crit = json::parse(read_text_file(root() / "ch_empty/criteria.json"));
  EXPECT_EQ(crit["findings"], 0);
  EXPECT_EQ(crit["theta_c"], 1.0);
  const std::string diag = read_text_file(root() / "ch_empty/diagnostics.csv");
  EXPECT_EQ(std::count(diag.begin(), diag.end(), '\n'), 1 + 54 / 5);
}

TEST_F(CliTest, BridgeCheckConformant) {
  json j = base();
  j["model"] = bridge_model("full");
  j["bridge_check"] = {{"samples", 5}, {"reference_model", "models/object.bin"}};
  j["output_dir"] = "bridge_check";
  ASSERT_EQ(cmd_bridge_check(parse(j)), kExitOk);
  const auto r = json::parse(read_text_file(root() / "bridge_check/bridge_check.json"));
  EXPECT_TRUE(r["conformant"].get<bool>());
}

TEST(RunConfigParse, RejectsUnknownKeysEverywhere) {
  const char* bad[] = {
      R"({"seed": 1, "bogus": 2})",
      R"({"seed": 1, "dataset": {"path": "d", "colour": 1}})",
      R"({"seed": 1, "params": {"mask": {"grid": 7}}})",
      R"({"seed": 1, "cleverhans": {"theta": 0.5}})",
      R"({"seed": 1, "model": {"path": "m", "bridge": {"command": ["x"]}}})",
      R"({"seed": 1, "methods": ["gradcam", "lime"]})",
      R"({"seed": 1, "metrics": ["accuracy"]})",
      R"({"workers": 2})",
      R"({"seed": 1, "dataset": {"path": "d", "split": "test"}})",
      "[1, 2",
  };
  for (const char* text : bad) {
    SCOPED_TRACE(text);
    EXPECT_SBENCH_ERROR(parse_run_config(text), ErrorCode::kConfigInvalid);
  }
}

TEST(RunConfigParse, ResolvesPathsAndDefaults) {
  const RunConfig c = parse_run_config(
      R"({"seed": 4, "dataset": {"path": "d"}, "model": {"path": "/abs/m.bin"},
          "output_dir": "out", "cleverhans": {"localization": "pg_hit"}})",
      "/base");
  EXPECT_EQ(c.dataset.path, fs::path("/base/d"));
  EXPECT_EQ(c.model.path, fs::path("/abs/m.bin"));
  EXPECT_EQ(c.output_dir, fs::path("/base/out"));
  EXPECT_EQ(c.train.options.seed, 4u);
  EXPECT_EQ(c.params.sensitivity_radius, 0.2);
  EXPECT_EQ(c.criteria.mode, LocalizationMode::kPointingHit);
  RunConfig o = c;
  apply_overrides(o, {fs::path("x"), 3, 9});
  EXPECT_EQ(o.workers, 3u);
  EXPECT_EQ(o.seed, 9u);
  EXPECT_EQ(o.train.options.seed, 9u);
  EXPECT_SBENCH_ERROR(apply_overrides(o, {std::nullopt, 0, std::nullopt}),
                      ErrorCode::kConfigInvalid);
}

int run_sbench(const std::string& args) {
  const std::string cmd = std::string(SBENCH_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(SbenchBinary, ExitCodes) {
  testing::TempDir dir("exit");
  EXPECT_EQ(run_sbench(""), kExitConfig);
  EXPECT_EQ(run_sbench("evaluate"), kExitConfig);
  EXPECT_EQ(run_sbench("evaluate --config " + (dir.path() / "none.json").string()), kExitConfig);
  write_text_file(dir.path() / "bad.json", R"({"seed": 1, "mystery": true})");
  EXPECT_EQ(run_sbench("train --config " + (dir.path() / "bad.json").string()), kExitConfig);
  write_text_file(dir.path() / "io.json",
                  R"({"seed": 1, "dataset": {"path": "missing"}, "model": {"path": "m.bin"}})");
  EXPECT_EQ(run_sbench("train --config " + (dir.path() / "io.json").string()), kExitIo);
  EXPECT_EQ(run_sbench("--help"), kExitOk);
}

}  // namespace
}  // namespace sbench
