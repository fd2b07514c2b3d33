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

#ifndef SALIENCYBENCH_SIMD_KERNELS_HPP_
#define SALIENCYBENCH_SIMD_KERNELS_HPP_

#include <cstddef>

namespace sbench::simd {

// Inner-loop kernels used by the network and the metrics. Each instruction
// set provides the same table; the scalar one is the reference the others
// are tested against.
//
// The active table is chosen once at startup: SALIENCYBENCH_SIMD=scalar|avx2|
// neon forces a variant, otherwise the widest one the CPU supports is used.
// Changing it mid-run is allowed but not synchronized with in-flight work.

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  float (*dot)(const float* a, const float* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
  // out[i] = a[i] * b[i]; out may alias a or b.
  void (*hadamard)(const float* a, const float* b, float* out, std::size_t n);
  // out[i] = max(out[i], |x[i]|). Exact, so all variants agree bit-for-bit.
  void (*max_abs_accumulate)(const float* x, float* out, std::size_t n);
  // out[i] = max(x[i], 0)
  void (*relu)(const float* x, float* out, std::size_t n);
};

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa best_supported_isa();

// The table in use.
const KernelTable& kernels();
// A specific variant; throws kInvalidArgument when not supported here.
const KernelTable& kernels_for(Isa isa);
// Switches the active table. Throws when unsupported.
void select_isa(Isa isa);

namespace scalar {
const KernelTable& table();
}
namespace avx2 {
const KernelTable& table();
}
namespace neon {
const KernelTable& table();
}

}  // namespace sbench::simd

#endif  // SALIENCYBENCH_SIMD_KERNELS_HPP_
