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

#include <atomic>
#include <cstdlib>
#include <string>

#include "saliencybench/error.hpp"
#include "saliencybench/simd/kernels.hpp"

namespace sbench::simd {
namespace {

const KernelTable* initial_table() {
  Isa isa = best_supported_isa();
  if (const char* forced = std::getenv("SALIENCYBENCH_SIMD")) {
    const std::string name(forced);
    if (name == "scalar") {
      isa = Isa::kScalar;
    } else if (name == "avx2" && isa_supported(Isa::kAvx2)) {
      isa = Isa::kAvx2;
    } else if (name == "neon" && isa_supported(Isa::kNeon)) {
      isa = Isa::kNeon;
    }
  }
  return &kernels_for(isa);
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(SALIENCYBENCH_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(SALIENCYBENCH_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa best_supported_isa() {
  if (isa_supported(Isa::kAvx2)) return Isa::kAvx2;
  if (isa_supported(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("instruction set not available: ") + isa_name(isa));
  }
  switch (isa) {
#if defined(SALIENCYBENCH_HAVE_AVX2)
    case Isa::kAvx2: return avx2::table();
#endif
#if defined(SALIENCYBENCH_HAVE_NEON)
    case Isa::kNeon: return neon::table();
#endif
    default: return scalar::table();
  }
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

void select_isa(Isa isa) {
  active().store(&kernels_for(isa), std::memory_order_release);
}

}  // namespace sbench::simd
