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

#include <cmath>
#include <cstring>
#include <limits>

#include "json.hpp"
#include "saliencybench/base64.hpp"
#include "saliencybench/report.hpp"
#include "test_util.hpp"

namespace sbench {
namespace {

std::vector<std::uint8_t> bytes(std::string_view s) { return {s.begin(), s.end()}; }

TEST(Base64, Rfc4648Vectors) {
  const std::pair<const char*, const char*> cases[] = {
      {"", ""},           {"f", "Zg=="},         {"fo", "Zm8="},        {"foo", "Zm9v"},
      {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"}};
  for (auto [plain, enc] : cases) {
    EXPECT_EQ(base64::encode(bytes(plain)), enc);
    EXPECT_EQ(base64::decode(enc), bytes(plain));
  }
}

TEST(Base64, RejectsMalformed) {
  for (const char* bad : {"Zg=", "Z", "Zm9v!A==", "Zg==Zg==", "=Zg="}) {
    EXPECT_SBENCH_ERROR(base64::decode(bad), ErrorCode::kProtocol);
  }
  EXPECT_SBENCH_ERROR(base64::decode_floats("Zm9v"), ErrorCode::kProtocol);
}

TEST(Base64, FloatsRoundTripBitExact) {
  Rng rng(4);
  std::vector<float> v(1001);
  for (float& x : v) x = static_cast<float>(100.0 * rng.normal());
  v[0] = -0.0f;
  v[1] = std::numeric_limits<float>::denorm_min();
  v[2] = std::numeric_limits<float>::max();
  const auto back = base64::decode_floats(base64::encode_floats(v));
  ASSERT_EQ(back.size(), v.size());
  EXPECT_EQ(std::memcmp(back.data(), v.data(), v.size() * sizeof(float)), 0);
  // Little-endian float32: 1.0f is 00 00 80 3f.
  const float one = 1.0f;
  EXPECT_EQ(base64::encode_floats({&one, 1}), "AACAPw==");
}

TEST(Report, FormatValue) {
  EXPECT_EQ(format_value(std::nullopt), "");
  EXPECT_EQ(format_value(0.5), "0.5");
  EXPECT_EQ(format_value(-0.0), "0");
  EXPECT_EQ(format_value(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_value(1e-12), "1e-12");
}

TEST(Report, CsvRoundTrip) {
  std::vector<MetricRow> rows = {
      {"synthetic", "cnn", "gradcam", "pg", "sample", 0.25, 1, 0, 3},
      {"synthetic", "cnn,v2", "rise", "iosr", "sample", std::nullopt, 0, 1, 3},
      {"synthetic", "say \"hi\"", "rise", "iosr", "aggregate", 0.125, 4, 1, 3},
  };
  const std::string csv = rows_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kMetricCsvHeader);
  const auto back = rows_from_csv(csv);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].model_id, rows[i].model_id);
    EXPECT_EQ(back[i].value, rows[i].value);
    EXPECT_EQ(back[i].n_excluded, rows[i].n_excluded);
    EXPECT_EQ(back[i].scope, rows[i].scope);
  }
  EXPECT_EQ(rows_to_csv(back), csv);
  EXPECT_SBENCH_ERROR(rows_from_csv("a,b\n"), ErrorCode::kFormat);
  EXPECT_SBENCH_ERROR(rows_from_csv(std::string(kMetricCsvHeader) + "\nx,y\n"),
                      ErrorCode::kFormat);
}

TEST(Report, JsonAgreesWithCsv) {
  std::vector<MetricRow> rows = {{"d", "m", "gradient", "iauc", "sample", 1.0 / 3.0, 1, 0, 0},
                                 {"d", "m", "gradient", "pg", "sample", std::nullopt, 0, 1, 0}};
  const auto j = nlohmann::json::parse(rows_to_json(rows));
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["value"].get<double>(), std::stod(format_value(1.0 / 3.0)));
  EXPECT_TRUE(j[1]["value"].is_null());
}

TEST(Report, TextFiles) {
  testing::TempDir dir("report");
  write_text_file(dir.path() / "a.txt", "x\ny");
  EXPECT_EQ(read_text_file(dir.path() / "a.txt"), "x\ny");
  EXPECT_SBENCH_ERROR(read_text_file(dir.path() / "missing"), ErrorCode::kIo);
  EXPECT_SBENCH_ERROR(write_text_file(dir.path() / "no/such/dir/f", ""), ErrorCode::kIo);
}

}  // namespace
}  // namespace sbench
