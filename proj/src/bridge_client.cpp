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

#include "saliencybench/bridge_client.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "saliencybench/base64.hpp"
#include "saliencybench/error.hpp"

namespace sbench {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kMaxLine = std::size_t{1} << 28;

constexpr ErrorCode kAllCodes[] = {
    ErrorCode::kShapeMismatch,     ErrorCode::kCapabilityMissing,
    ErrorCode::kClassOutOfRange,   ErrorCode::kUnknownLayer,
    ErrorCode::kDegenerateUnit,    ErrorCode::kDiverged,
    ErrorCode::kInvalidArgument,   ErrorCode::kEmptyMask,
    ErrorCode::kEmptySalientArea,  ErrorCode::kNoCorrectPredictions,
    ErrorCode::kUnpairedSample,    ErrorCode::kUndefined,
    ErrorCode::kUnknownClass,      ErrorCode::kConfigInvalid,
    ErrorCode::kMissingMasks,      ErrorCode::kEmptyReport,
    ErrorCode::kIo,                ErrorCode::kFormat,
    ErrorCode::kProtocol,          ErrorCode::kProtocolVersionMismatch,
    ErrorCode::kBridgeTimeout,     ErrorCode::kBridgeCrash,
};

int remaining_ms(Clock::time_point deadline) {
  const auto left =
      std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() > 0 ? static_cast<int>(left.count()) : 0;
}

json tensor_json(const Tensor& t) {
  return {{"shape", t.shape()}, {"data", base64::encode_floats(t.values())}};
}

Tensor tensor_from(const json& j) {
  Shape shape;
  std::string data;
  try {
    shape = j.at("shape").get<Shape>();
    data = j.at("data").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("bad tensor object: ") + e.what());
  }
  std::vector<float> values = base64::decode_floats(data);
  if (values.size() != shape_size(shape)) {
    throw Error(ErrorCode::kProtocol, "tensor payload has " + std::to_string(values.size()) +
                                          " values for shape " + shape_to_string(shape));
  }
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace

namespace bridge {

std::string tensor_to_json(const Tensor& t) { return tensor_json(t).dump(); }

Tensor tensor_from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("bad tensor JSON: ") + e.what());
  }
  return tensor_from(j);
}

ErrorCode error_code_from_wire(const std::string& code) {
  for (ErrorCode c : kAllCodes) {
    if (code == error_code_name(c)) return c;
  }
  return ErrorCode::kProtocol;
}

}  // namespace bridge

struct BridgedModel::Process {
  pid_t pid = -1;
  int fd = -1;
  std::string buffer;
};

BridgedModel::BridgedModel(BridgeOptions options) : options_(std::move(options)) {
  if (options_.command.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "bridge command is empty");
  }
  const json reply = json::parse(call("handshake", json{{"version", kBridgeProtocol}}.dump()));
  try {
    const std::string version = reply.at("version").get<std::string>();
    if (version != kBridgeProtocol) {
      throw Error(ErrorCode::kProtocolVersionMismatch,
                  "bridge speaks " + version + ", expected " + std::string(kBridgeProtocol));
    }
    num_classes_ = reply.at("num_classes").get<std::size_t>();
    input_shape_ = reply.at("input_shape").get<Shape>();
    advertised_ = reply.at("capabilities").get<std::vector<std::string>>();
    layer_names_ = reply.value("layer_names", std::vector<std::string>{});
    model_id_ = reply.value("model_id", std::string("bridge"));
    if (reply.contains("target_layer") && reply.at("target_layer").is_string()) {
      target_layer_ = reply.at("target_layer").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("bad handshake: ") + e.what());
  }
  for (const std::string& name : advertised_) {
    const auto cap = capability_from_name(name);
    if (!cap) throw Error(ErrorCode::kProtocol, "unknown capability " + name);
    if (*cap == Capability::kGuided || *cap == Capability::kExcitation) {
      spdlog::warn("bridge advertises {} but the protocol has no op for it", name);
      continue;
    }
    capabilities_.insert(*cap);
  }
  if (!capabilities_.valid()) {
    throw Error(ErrorCode::kProtocol, "bridge capabilities lack PREDICT");
  }
  if (num_classes_ == 0 || input_shape_.size() != 3) {
    throw Error(ErrorCode::kProtocol, "bridge reported an unusable model shape");
  }
}

BridgedModel::~BridgedModel() {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!process_) return;
  try {
    const std::string line =
        json{{"id", next_id_++}, {"op", "shutdown"}}.dump() + "\n";
    ::send(process_->fd, line.data(), line.size(), MSG_NOSIGNAL);
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(process_->pid, nullptr, WNOHANG) == process_->pid) {
        process_->pid = -1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  } catch (...) {
  }
  stop_locked();
}

void BridgedModel::start_locked() const {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    throw Error(ErrorCode::kBridgeCrash, std::string("socketpair: ") + std::strerror(errno));
  }
  std::vector<char*> argv;
  for (const std::string& a : options_.command) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    throw Error(ErrorCode::kBridgeCrash, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::execvp(argv[0], argv.data());
    _exit(127);
  }
  ::close(sv[1]);
  process_ = std::make_unique<Process>();
  process_->pid = pid;
  process_->fd = sv[0];
  spdlog::debug("bridge started, pid {}", pid);
}

void BridgedModel::stop_locked() const {
  if (!process_) return;
  if (process_->fd >= 0) ::close(process_->fd);
  if (process_->pid > 0) {
    ::kill(process_->pid, SIGKILL);
    ::waitpid(process_->pid, nullptr, 0);
  }
  process_.reset();
}

std::string BridgedModel::exchange_locked(const std::string& line) const {
  if (!process_) start_locked();
  const auto deadline = Clock::now() + options_.timeout;
  Process& p = *process_;

  std::string out = line + "\n";
  std::size_t sent = 0;
  while (sent < out.size()) {
    pollfd pfd{p.fd, POLLOUT, 0};
    const int r = ::poll(&pfd, 1, remaining_ms(deadline));
    if (r == 0) {
      stop_locked();
      throw Error(ErrorCode::kBridgeTimeout, "bridge did not accept the request in time");
    }
    if (r < 0 && errno == EINTR) continue;
    const ssize_t n = ::send(p.fd, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      stop_locked();
      throw Error(ErrorCode::kBridgeCrash, std::string("bridge write failed: ") +
                                               std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }

  for (;;) {
    const std::size_t nl = p.buffer.find('\n');
    if (nl != std::string::npos) {
      std::string reply = p.buffer.substr(0, nl);
      p.buffer.erase(0, nl + 1);
      return reply;
    }
    if (p.buffer.size() > kMaxLine) {
      stop_locked();
      throw Error(ErrorCode::kProtocol, "bridge reply line too long");
    }
    pollfd pfd{p.fd, POLLIN, 0};
    const int r = ::poll(&pfd, 1, remaining_ms(deadline));
    if (r == 0) {
      stop_locked();
      throw Error(ErrorCode::kBridgeTimeout,
                  "no bridge reply within " + std::to_string(options_.timeout.count()) + " ms");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      stop_locked();
      throw Error(ErrorCode::kBridgeCrash, std::string("poll: ") + std::strerror(errno));
    }
    char chunk[65536];
    const ssize_t n = ::recv(p.fd, chunk, sizeof chunk, 0);
    if (n > 0) {
      p.buffer.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    if (n < 0 && (errno == EINTR || errno == EAGAIN)) continue;
    int status = 0;
    std::string how = "closed its output";
    if (::waitpid(p.pid, &status, WNOHANG) == p.pid) {
      p.pid = -1;
      how = WIFEXITED(status) ? "exited with status " + std::to_string(WEXITSTATUS(status))
                              : "was killed by signal " + std::to_string(WTERMSIG(status));
    }
    stop_locked();
    throw Error(ErrorCode::kBridgeCrash, "bridge process " + how);
  }
}

std::string BridgedModel::raw_request(const std::string& line) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return exchange_locked(line);
}

// Returns the result object of a successful reply as JSON text.
std::string BridgedModel::call(const std::string& op, const std::string& fields) const {
  std::lock_guard<std::mutex> lock(mutex_);
  const bool fresh = !process_;
  if (fresh && op != "handshake") {
    // The previous process died or timed out; a new one needs its handshake.
    const std::uint64_t id = next_id_++;
    const std::string hello = json{{"id", id}, {"op", "handshake"},
                                   {"version", kBridgeProtocol}}.dump();
    const json reply = json::parse(exchange_locked(hello), nullptr, false);
    if (reply.is_discarded() || !reply.value("ok", false)) {
      stop_locked();
      throw Error(ErrorCode::kBridgeCrash, "restarted bridge failed its handshake");
    }
  }
  json request = json::parse(fields);
  const std::uint64_t id = next_id_++;
  request["id"] = id;
  request["op"] = op;
  const std::string text = exchange_locked(request.dump());

  json reply;
  try {
    reply = json::parse(text);
  } catch (const json::exception&) {
    throw Error(ErrorCode::kProtocol, "malformed bridge reply: " + text.substr(0, 200));
  }
  try {
    if (reply.at("id").get<std::uint64_t>() != id) {
      throw Error(ErrorCode::kProtocol, "bridge reply id does not match the request");
    }
    if (!reply.at("ok").get<bool>()) {
      const json& err = reply.at("error");
      throw Error(bridge::error_code_from_wire(err.at("code").get<std::string>()),
                  "bridge: " + err.value("message", std::string()));
    }
    return reply.at("result").dump();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("bad bridge reply: ") + e.what());
  }
}

std::vector<float> BridgedModel::predict(const Tensor& image) const {
  check_input(image);
  const json result = json::parse(call("predict", json{{"tensor", tensor_json(image)}}.dump()));
  Tensor probs;
  try {
    probs = tensor_from(result.at("probabilities"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("bad predict reply: ") + e.what());
  }
  if (probs.size() != num_classes_) {
    throw Error(ErrorCode::kProtocol, "bridge returned " + std::to_string(probs.size()) +
                                          " probabilities for " +
                                          std::to_string(num_classes_) + " classes");
  }
  return probs.vector();
}

Tensor BridgedModel::input_gradient(const Tensor& image, std::size_t class_index,
                                    ScoreKind score) const {
  require(Capability::kInputGrad);
  check_input(image);
  check_class(class_index);
  const json req = {{"tensor", tensor_json(image)},
                    {"class_index", class_index},
                    {"score", score == ScoreKind::kLogit ? "logit" : "probability"}};
  const json result = json::parse(call("input_gradient", req.dump()));
  Tensor g;
  try {
    g = tensor_from(result.at("gradient"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("bad gradient reply: ") + e.what());
  }
  if (g.shape() != image.shape()) {
    throw Error(ErrorCode::kProtocol, "gradient shape " + shape_to_string(g.shape()) +
                                          " does not echo the input");
  }
  return g;
}

LayerGradients BridgedModel::layer_activations_and_gradients(
    const Tensor& image, std::size_t class_index, const std::string& layer_name) const {
  require(Capability::kLayerIntrospect);
  check_input(image);
  check_class(class_index);
  const json req = {{"tensor", tensor_json(image)},
                    {"class_index", class_index},
                    {"layer_name", layer_name}};
  const json result = json::parse(call("layer_grads", req.dump()));
  LayerGradients out;
  try {
    out.activations = tensor_from(result.at("activations"));
    out.gradients = tensor_from(result.at("gradients"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("bad layer_grads reply: ") + e.what());
  }
  if (out.activations.shape() != out.gradients.shape()) {
    throw Error(ErrorCode::kProtocol, "activation and gradient shapes differ");
  }
  return out;
}

}  // namespace sbench
