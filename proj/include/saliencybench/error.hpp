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

#ifndef SALIENCYBENCH_ERROR_HPP_
#define SALIENCYBENCH_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace sbench {

// Every failure the toolkit reports carries one of these codes. Callers that
// aggregate per-sample results (metrics, the runner) catch Error and book the
// sample as excluded instead of aborting.
enum class ErrorCode {
  kShapeMismatch,
  kCapabilityMissing,
  kClassOutOfRange,
  kUnknownLayer,
  kDegenerateUnit,
  kDiverged,
  kInvalidArgument,
  kEmptyMask,
  kEmptySalientArea,
  kNoCorrectPredictions,
  kUnpairedSample,
  kUndefined,
  kUnknownClass,
  kConfigInvalid,
  kMissingMasks,
  kEmptyReport,
  kIo,
  kFormat,
  kProtocol,
  kProtocolVersionMismatch,
  kBridgeTimeout,
  kBridgeCrash,
};

// Upper-snake name, e.g. "CAPABILITY_MISSING". Used in logs, reports and the
// bridge wire protocol.
const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sbench

#endif  // SALIENCYBENCH_ERROR_HPP_
