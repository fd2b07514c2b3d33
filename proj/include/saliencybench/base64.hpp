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

#ifndef SALIENCYBENCH_BASE64_HPP_
#define SALIENCYBENCH_BASE64_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sbench::base64 {

// RFC 4648 with padding.
std::string encode(std::span<const std::uint8_t> bytes);
// Throws kProtocol on bad characters, bad padding or a bad length.
std::vector<std::uint8_t> decode(std::string_view text);

// float32 little-endian payloads.
std::string encode_floats(std::span<const float> values);
std::vector<float> decode_floats(std::string_view text);

}  // namespace sbench::base64

#endif  // SALIENCYBENCH_BASE64_HPP_
