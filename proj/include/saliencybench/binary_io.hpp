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

#ifndef SALIENCYBENCH_BINARY_IO_HPP_
#define SALIENCYBENCH_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "saliencybench/error.hpp"

namespace sbench::binary_io {

// Container shared by the model and saliency-map files:
//   8-byte magic | u64 little-endian header length | JSON header | payload
// where the payload is little-endian float32.

inline std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) |
           (v >> 24);
  }
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (in.gcount() != 8) throw Error(ErrorCode::kFormat, "truncated length field");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

inline void write_floats(std::ostream& out, std::span<const float> values) {
  for (float f : values) {
    std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(f));
    out.write(reinterpret_cast<const char*>(&bits), 4);
  }
}

inline void read_floats(std::istream& in, std::span<float> values) {
  for (float& f : values) {
    std::uint32_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), 4);
    if (in.gcount() != 4) throw Error(ErrorCode::kFormat, "truncated float payload");
    f = std::bit_cast<float>(to_little(bits));
  }
}

inline void write_header(std::ostream& out, std::string_view magic,
                         const std::string& json) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
  write_u64(out, json.size());
  out.write(json.data(), static_cast<std::streamsize>(json.size()));
}

// Checks the magic and returns the JSON header text.
inline std::string read_header(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (in.gcount() != static_cast<std::streamsize>(magic.size()) || got != magic) {
    throw Error(ErrorCode::kFormat, "bad magic, expected " + std::string(magic));
  }
  const std::uint64_t length = read_u64(in);
  if (length > (1u << 26)) throw Error(ErrorCode::kFormat, "header too large");
  std::string json(length, '\0');
  in.read(json.data(), static_cast<std::streamsize>(length));
  if (in.gcount() != static_cast<std::streamsize>(length)) {
    throw Error(ErrorCode::kFormat, "truncated header");
  }
  return json;
}

}  // namespace sbench::binary_io

#endif  // SALIENCYBENCH_BINARY_IO_HPP_
