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

#include <chrono>
#include <cmath>
#include <cstring>

#include "json.hpp"
#include "saliencybench/bridge_client.hpp"
#include "saliencybench/saliency.hpp"
#include "test_util.hpp"

#ifndef FAKE_BRIDGE_PATH
#error "FAKE_BRIDGE_PATH must point at the fake bridge executable"
#endif

namespace sbench {
namespace {

using nlohmann::json;

class BridgeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    model_.save(dir_.path() / "model.bin");
  }

  BridgeOptions options(const std::string& mode,
                        std::chrono::milliseconds timeout = std::chrono::seconds(30)) const {
    BridgeOptions o;
    o.command = {FAKE_BRIDGE_PATH, "--model", (dir_.path() / "model.bin").string(), "--mode",
                 mode};
    o.timeout = timeout;
    return o;
  }

  testing::TempDir dir_{"bridge"};
  MicroCnn model_ = testing::small_cnn(21);
};

TEST_F(BridgeTest, HandshakeReportsModel) {
  BridgedModel b(options("full"));
  EXPECT_EQ(b.num_classes(), 3u);
  EXPECT_EQ(b.input_shape(), (Shape{3, 16, 16}));
  EXPECT_EQ(b.capabilities().names(),
            (std::vector<std::string>{"PREDICT", "INPUT_GRAD", "LAYER_INTROSPECT"}));
  EXPECT_EQ(b.layer_names(), model_.layer_names());
  EXPECT_EQ(b.target_layer(), model_.target_layer());
  EXPECT_EQ(b.model_id(), "fake:" + model_.model_id());
}

TEST_F(BridgeTest, PredictOnlyWrapper) {
  BridgedModel b(options("predict-only"));
  EXPECT_EQ(b.capabilities().names(), std::vector<std::string>{"PREDICT"});
  const Tensor img = testing::random_tensor({3, 16, 16}, 1);
  EXPECT_SBENCH_ERROR(b.input_gradient(img, 0), ErrorCode::kCapabilityMissing);
  EXPECT_SBENCH_ERROR(gradcam_saliency(b, img, 0), ErrorCode::kCapabilityMissing);
  EXPECT_NO_THROW(b.predict(img));
}

TEST_F(BridgeTest, UnservableCapabilitiesAreDropped) {
  BridgedModel b(options("advertise-guided"));
  EXPECT_FALSE(b.capabilities().has(Capability::kGuided));
  EXPECT_FALSE(b.capabilities().has(Capability::kExcitation));
  EXPECT_EQ(b.advertised_capabilities().size(), 5u);
}

TEST_F(BridgeTest, RoundTripMatchesInProcess) {
  BridgedModel b(options("full"));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor img = testing::random_tensor({3, 16, 16}, 100 + seed);
    const auto want = model_.predict(img);
    const auto got = b.predict(img);
    ASSERT_EQ(got.size(), want.size());
    double total = 0.0;
    for (std::size_t c = 0; c < want.size(); ++c) {
      EXPECT_NEAR(got[c], want[c], 1e-5);
      total += got[c];
    }
    EXPECT_NEAR(total, 1.0, 1e-4);
    const std::size_t c = seed % 3;
    const Tensor g_want = model_.input_gradient(img, c);
    const Tensor g_got = b.input_gradient(img, c);
    ASSERT_EQ(g_got.shape(), img.shape());
    for (std::size_t i = 0; i < g_want.size(); ++i) EXPECT_NEAR(g_got[i], g_want[i], 1e-4);
  }
  const Tensor img = testing::random_tensor({3, 16, 16}, 5);
  const Tensor pg = b.input_gradient(img, 1, ScoreKind::kProbability);
  const Tensor pw = model_.input_gradient(img, 1, ScoreKind::kProbability);
  for (std::size_t i = 0; i < pw.size(); ++i) EXPECT_NEAR(pg[i], pw[i], 1e-4);

  const SaliencyMap cam = gradcam_saliency(b, img, 2);
  const SaliencyMap cam_want = gradcam_saliency(model_, img, 2);
  for (std::size_t i = 0; i < cam.scores.size(); ++i)
    EXPECT_NEAR(cam.scores[i], cam_want.scores[i], 1e-4);
  EXPECT_SBENCH_ERROR(b.layer_activations_and_gradients(img, 0, "nope"),
                      ErrorCode::kUnknownLayer);
  // Client-side checks fire before anything is sent.
  EXPECT_SBENCH_ERROR(b.predict(Tensor({3, 8, 8})), ErrorCode::kShapeMismatch);
  EXPECT_SBENCH_ERROR(b.input_gradient(img, 3), ErrorCode::kClassOutOfRange);
}

TEST_F(BridgeTest, UnknownOpGetsStructuredError) {
  BridgedModel b(options("full"));
  const json reply = json::parse(b.raw_request(R"({"id": 77, "op": "dance"})"));
  EXPECT_EQ(reply["id"], 77);
  EXPECT_FALSE(reply["ok"].get<bool>());
  EXPECT_EQ(reply["error"]["code"], "PROTOCOL");
  const json garbage = json::parse(b.raw_request("hello"));
  EXPECT_FALSE(garbage["ok"].get<bool>());
  // The session still works afterwards.
  EXPECT_NO_THROW(b.predict(testing::random_tensor({3, 16, 16}, 2)));
}

TEST_F(BridgeTest, MalformedReplyIsProtocolError) {
  BridgedModel b(options("malformed"));
  EXPECT_SBENCH_ERROR(b.predict(testing::random_tensor({3, 16, 16}, 3)), ErrorCode::kProtocol);
}

TEST_F(BridgeTest, MismatchedIdIsProtocolError) {
  BridgedModel b(options("bad-id"));
  EXPECT_SBENCH_ERROR(b.predict(testing::random_tensor({3, 16, 16}, 3)), ErrorCode::kProtocol);
}

TEST_F(BridgeTest, ShortPayloadIsProtocolError) {
  BridgedModel b(options("short-payload"));
  EXPECT_SBENCH_ERROR(b.predict(testing::random_tensor({3, 16, 16}, 3)), ErrorCode::kProtocol);
}

TEST_F(BridgeTest, WrongVersionRejected) {
  EXPECT_SBENCH_ERROR(BridgedModel b(options("wrong-version")),
                      ErrorCode::kProtocolVersionMismatch);
}

TEST_F(BridgeTest, TimeoutAfterDeadline) {
  using namespace std::chrono;
  BridgedModel b(options("hang", milliseconds(300)));
  const auto t0 = steady_clock::now();
  EXPECT_SBENCH_ERROR(b.predict(testing::random_tensor({3, 16, 16}, 4)),
                      ErrorCode::kBridgeTimeout);
  const auto waited = duration_cast<milliseconds>(steady_clock::now() - t0).count();
  EXPECT_GE(waited, 290);
  EXPECT_LT(waited, 5000);
}

TEST_F(BridgeTest, CrashIsReportedAndSessionRestarts) {
  BridgeOptions o = options("crash");
  o.command.push_back("--crash-marker");
  o.command.push_back((dir_.path() / "crashed").string());
  BridgedModel b(o);
  const Tensor img = testing::random_tensor({3, 16, 16}, 6);
  EXPECT_SBENCH_ERROR(b.predict(img), ErrorCode::kBridgeCrash);
  const auto p = b.predict(img);
  const auto want = model_.predict(img);
  for (std::size_t c = 0; c < want.size(); ++c) EXPECT_NEAR(p[c], want[c], 1e-5);

  BridgedModel always(options("crash"));
  EXPECT_SBENCH_ERROR(always.predict(img), ErrorCode::kBridgeCrash);
  EXPECT_SBENCH_ERROR(always.predict(img), ErrorCode::kBridgeCrash);
}

TEST_F(BridgeTest, MissingExecutable) {
  BridgeOptions o;
  o.command = {"/nonexistent/bridge"};
  EXPECT_SBENCH_ERROR(BridgedModel b(o), ErrorCode::kBridgeCrash);
  EXPECT_SBENCH_ERROR(BridgedModel b(BridgeOptions{}), ErrorCode::kInvalidArgument);
}

TEST(BridgeWire, TensorRoundTripIsBitExact) {
  Tensor t = testing::random_tensor({2, 3, 5}, 8, -1e6, 1e6);
  t[0] = -0.0f;
  t[1] = 1e-42f;
  const Tensor back = bridge::tensor_from_json(bridge::tensor_to_json(t));
  ASSERT_EQ(back.shape(), t.shape());
  EXPECT_EQ(std::memcmp(back.values().data(), t.values().data(), t.size() * 4), 0);
  EXPECT_SBENCH_ERROR(bridge::tensor_from_json(R"({"shape": [2], "data": "AACAPw=="})"),
                      ErrorCode::kProtocol);
  EXPECT_SBENCH_ERROR(bridge::tensor_from_json(R"({"shape": [1]})"), ErrorCode::kProtocol);
  EXPECT_SBENCH_ERROR(bridge::tensor_from_json("["), ErrorCode::kProtocol);
}

TEST(BridgeWire, ErrorCodesFromWire) {
  EXPECT_EQ(bridge::error_code_from_wire("UNKNOWN_LAYER"), ErrorCode::kUnknownLayer);
  EXPECT_EQ(bridge::error_code_from_wire("BRIDGE_TIMEOUT"), ErrorCode::kBridgeTimeout);
  EXPECT_EQ(bridge::error_code_from_wire("whatever"), ErrorCode::kProtocol);
}

}  // namespace
}  // namespace sbench
