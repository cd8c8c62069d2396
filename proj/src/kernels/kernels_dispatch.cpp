// Copyright 2026-present the hlm project
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
#include <cstring>

#include "hlm/kernels.hpp"

namespace hlm::kernels {

#if defined(HLM_HAVE_AVX2)
const Backend* avx2_backend_impl();  // defined in kernels_avx2.cpp
#endif

const Backend* avx2_backend() {
#if defined(HLM_HAVE_AVX2)
  return avx2_backend_impl();
#else
  return nullptr;
#endif
}

namespace {

std::atomic<const Backend*> g_forced{nullptr};

const Backend* pick_default() {
  if (const char* env = std::getenv("HLM_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_backend();
    if (std::strcmp(env, "avx2") == 0 && avx2_backend() != nullptr) return avx2_backend();
  }
  if (const Backend* b = avx2_backend()) return b;
  return &scalar_backend();
}

}  // namespace

const Backend& active() {
  if (const Backend* forced = g_forced.load(std::memory_order_relaxed)) return *forced;
  static const Backend* chosen = pick_default();
  return *chosen;
}

void force_backend(const Backend* b) { g_forced.store(b, std::memory_order_relaxed); }

}  // namespace hlm::kernels
