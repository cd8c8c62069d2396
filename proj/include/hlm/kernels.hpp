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

#pragma once

namespace hlm::kernels {

// Dense double-precision kernels behind the model, the tape and the
// optimizer. Each entry has a scalar reference implementation and may have
// SIMD variants selected once at startup.
//
// Contract: every variant must produce results BIT-IDENTICAL to the scalar
// reference. The reference is written so this is achievable with plain
// vector ISAs:
//   - element-wise kernels keep lanes independent, no cross-lane math;
//   - accumulations over a reduction dimension run in ascending index order
//     for each output element (matmul_nn / matmul_tn iterate k outermost);
//   - matmul_nt dots use four interleaved accumulators (k % 4) combined as
//     (l0 + l2) + (l1 + l3), then the tail is folded in sequentially;
//   - no FMA contraction anywhere (mul then add, two roundings).
// The equivalence test suite asserts exact equality between backends.
struct Backend {
  const char* name;

  // y += a * x
  void (*axpy)(int n, double a, const double* x, double* y);
  // y += x
  void (*vadd)(int n, const double* x, double* y);
  // y *= a
  void (*vscale)(int n, double a, double* y);
  // out = max(x, 0)
  void (*relu)(int n, const double* x, double* y);
  // dx += dy where out > 0
  void (*relu_grad)(int n, const double* out, const double* dy, double* dx);

  // c[rows x cols] += a[rows x inner] * b[inner x cols]
  void (*matmul_nn)(int rows, int inner, int cols, const double* a, const double* b, double* c);
  // c[rows x cols] += a[rows x inner] * b[cols x inner]^T
  void (*matmul_nt)(int rows, int inner, int cols, const double* a, const double* b, double* c);
  // c[inner x cols] += a[rows x inner]^T * b[rows x cols]
  void (*matmul_tn)(int rows, int inner, int cols, const double* a, const double* b, double* c);

  // out[g,:] = sum of x[idx[ptr[g]..ptr[g+1]),:]
  void (*seg_sum_rows)(int groups, const int* ptr, const int* idx, int cols, const double* x,
                       double* out);
  // acc[idx[ptr[g]..ptr[g+1]),:] += src[g,:]
  void (*seg_broadcast_add)(int groups, const int* ptr, const int* idx, int cols,
                            const double* src, double* acc);
  // out[r,:] = src[map[r],:]
  void (*gather_rows)(int rows, const int* map, int cols, const double* src, double* out);
  // acc[map[r],:] += src[r,:]
  void (*scatter_add_rows)(int rows, const int* map, int cols, const double* src, double* acc);
  // x[r,:] *= factor[r]
  void (*row_scale)(int rows, int cols, const double* factor, double* x);

  // Fused message-mix step: for node t,
  //   out[t,:] = relu((((col[colmap[t],:] + row[rowmap[t],:]) + glob[0,:])
  //                    + self[t,:]) + bias[0,:])
  // with the additions in exactly that order.
  void (*pooled_mix)(int nodes, int cols, const int* colmap, const int* rowmap,
                     const double* col_part, const double* row_part, const double* glob_part,
                     const double* self_part, const double* bias, double* out);

  // One Adam step with the max-second-moment (amsgrad) correction:
  //   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g*g;  vmax = max(vmax, v)
  //   p -= step_size * (m / (sqrt(vmax)*inv_sqrt_bc2 + eps))
  // where step_size = lr / (1 - b1^t) and inv_sqrt_bc2 = 1/sqrt(1 - b2^t).
  void (*adam_update)(int n, double* p, const double* g, double* m, double* v, double* vmax,
                      double beta1, double beta2, double step_size, double inv_sqrt_bc2,
                      double eps);
};

const Backend& scalar_backend();

// Null when the binary was built without AVX2 sources or the CPU lacks AVX2.
const Backend* avx2_backend();

// The dispatch choice: AVX2 when available, unless the HLM_KERNELS
// environment variable ("scalar" or "avx2") overrides it.
const Backend& active();

// Test hook; affects subsequent active() calls.
void force_backend(const Backend* b);

}  // namespace hlm::kernels
