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

#include "saliencybench/error.hpp"

namespace sbench {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::kCapabilityMissing: return "CAPABILITY_MISSING";
    case ErrorCode::kClassOutOfRange: return "CLASS_OUT_OF_RANGE";
    case ErrorCode::kUnknownLayer: return "UNKNOWN_LAYER";
    case ErrorCode::kDegenerateUnit: return "DEGENERATE_UNIT";
    case ErrorCode::kDiverged: return "DIVERGED";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kEmptyMask: return "EMPTY_MASK";
    case ErrorCode::kEmptySalientArea: return "EMPTY_SALIENT_AREA";
    case ErrorCode::kNoCorrectPredictions: return "NO_CORRECT_PREDICTIONS";
    case ErrorCode::kUnpairedSample: return "UNPAIRED_SAMPLE";
    case ErrorCode::kUndefined: return "UNDEFINED";
    case ErrorCode::kUnknownClass: return "UNKNOWN_CLASS";
    case ErrorCode::kConfigInvalid: return "CONFIG_INVALID";
    case ErrorCode::kMissingMasks: return "MISSING_MASKS";
    case ErrorCode::kEmptyReport: return "EMPTY_REPORT";
    case ErrorCode::kIo: return "IO";
    case ErrorCode::kFormat: return "FORMAT";
    case ErrorCode::kProtocol: return "PROTOCOL";
    case ErrorCode::kProtocolVersionMismatch: return "PROTOCOL_VERSION_MISMATCH";
    case ErrorCode::kBridgeTimeout: return "BRIDGE_TIMEOUT";
    case ErrorCode::kBridgeCrash: return "BRIDGE_CRASH";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace sbench
