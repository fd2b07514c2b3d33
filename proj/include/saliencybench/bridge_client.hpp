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

#ifndef SALIENCYBENCH_BRIDGE_CLIENT_HPP_
#define SALIENCYBENCH_BRIDGE_CLIENT_HPP_

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "saliencybench/error.hpp"
#include "saliencybench/model.hpp"
#include "saliencybench/tensor.hpp"

namespace sbench {

// Client side of the model bridge: a child process speaking newline-
// delimited JSON on stdin/stdout, one request in flight at a time.
//
// Request:  {"id": n, "op": "...", ...}
//   handshake      {"version": "SBBRIDGE/1"}
//   predict        {"tensor": T}
//   input_gradient {"tensor": T, "class_index": c, "score": "logit"|"probability"}
//   layer_grads    {"tensor": T, "class_index": c, "layer_name": name}
//   shutdown       {}
// Reply:    {"id": n, "ok": true, "result": {...}}
//           {"id": n, "ok": false, "error": {"code": "...", "message": "..."}}
// where T = {"shape": [...], "data": base64 of little-endian float32}.
// Results: predict {"probabilities": T}, input_gradient {"gradient": T},
// layer_grads {"activations": T, "gradients": T}.
// Handshake result: version, num_classes, input_shape, capabilities,
// layer_names and optionally model_id and target_layer.

inline constexpr std::string_view kBridgeProtocol = "SBBRIDGE/1";

namespace bridge {

// JSON text of a tensor object, and its inverse. Throws kProtocol when the
// payload length disagrees with the shape.
std::string tensor_to_json(const Tensor& t);
Tensor tensor_from_json(std::string_view json_text);

// Error code carried in a reply, mapped to the local vocabulary; unknown
// codes become kProtocol.
ErrorCode error_code_from_wire(const std::string& code);

}  // namespace bridge

struct BridgeOptions {
  // argv of the bridge process; command[0] is looked up on PATH.
  std::vector<std::string> command;
  std::chrono::milliseconds timeout{30000};
};

class BridgedModel final : public Model {
 public:
  // Starts the process and performs the handshake. Throws
  // kProtocolVersionMismatch, kProtocol, kBridgeTimeout or kBridgeCrash.
  explicit BridgedModel(BridgeOptions options);
  ~BridgedModel() override;

  BridgedModel(const BridgedModel&) = delete;
  BridgedModel& operator=(const BridgedModel&) = delete;

  std::size_t num_classes() const override { return num_classes_; }
  const Shape& input_shape() const override { return input_shape_; }
  // Only what the protocol can serve: GUIDED and EXCITATION are dropped.
  Capabilities capabilities() const override { return capabilities_; }
  std::string model_id() const override { return model_id_; }
  std::optional<std::string> target_layer() const override { return target_layer_; }
  std::vector<std::string> layer_names() const override { return layer_names_; }

  std::vector<float> predict(const Tensor& image) const override;
  Tensor input_gradient(const Tensor& image, std::size_t class_index,
                        ScoreKind score = ScoreKind::kLogit) const override;
  LayerGradients layer_activations_and_gradients(
      const Tensor& image, std::size_t class_index,
      const std::string& layer_name) const override;

  // Sends an arbitrary request line and returns the raw reply line. Meant
  // for conformance checks.
  std::string raw_request(const std::string& line) const;

  // Capabilities the server advertised, before filtering.
  const std::vector<std::string>& advertised_capabilities() const {
    return advertised_;
  }

 private:
  struct Process;

  void start_locked() const;
  void stop_locked() const;
  std::string exchange_locked(const std::string& line) const;
  std::string call(const std::string& op, const std::string& fields) const;

  BridgeOptions options_;
  mutable std::mutex mutex_;
  mutable std::unique_ptr<Process> process_;
  mutable std::uint64_t next_id_ = 0;

  std::size_t num_classes_ = 0;
  Shape input_shape_;
  Capabilities capabilities_;
  std::vector<std::string> advertised_;
  std::string model_id_ = "bridge";
  std::optional<std::string> target_layer_;
  std::vector<std::string> layer_names_;
};

}  // namespace sbench

#endif  // SALIENCYBENCH_BRIDGE_CLIENT_HPP_
