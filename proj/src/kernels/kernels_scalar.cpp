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

#include <cmath>
#include <cstddef>

#include "hlm/kernels.hpp"

// Reference kernels. The loop structures below define the arithmetic order
// that every SIMD variant must reproduce exactly; see kernels.hpp.

namespace hlm::kernels {
namespace {

void axpy(int n, double a, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void vadd(int n, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] += x[i];
}

void vscale(int n, double a, double* y) {
  for (int i = 0; i < n; ++i) y[i] *= a;
}

void relu(int n, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad(int n, const double* out, const double* dy, double* dx) {
  for (int i = 0; i < n; ++i) {
    if (out[i] > 0.0) dx[i] += dy[i];
  }
}

void matmul_nn(int rows, int inner, int cols, const double* a, const double* b, double* c) {
  for (int i = 0; i < rows; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * inner;
    double* crow = c + static_cast<std::size_t>(i) * cols;
    for (int k = 0; k < inner; ++k) {
      const double av = arow[k];
      const double* brow = b + static_cast<std::size_t>(k) * cols;
      for (int j = 0; j < cols; ++j) crow[j] += av * brow[j];
    }
  }
}

// Four interleaved accumulators so a 4-lane SIMD variant can match bit for
// bit; combined as (l0 + l2) + (l1 + l3), tail folded in afterwards.
double dot4(int n, const double* x, const double* y) {
  double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
  int k = 0;
  for (; k + 4 <= n; k += 4) {
    l0 += x[k] * y[k];
    l1 += x[k + 1] * y[k + 1];
    l2 += x[k + 2] * y[k + 2];
    l3 += x[k + 3] * y[k + 3];
  }
  double r = (l0 + l2) + (l1 + l3);
  for (; k < n; ++k) r += x[k] * y[k];
  return r;
}

void matmul_nt(int rows, int inner, int cols, const double* a, const double* b, double* c) {
  for (int i = 0; i < rows; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * inner;
    double* crow = c + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) {
      crow[j] += dot4(inner, arow, b + static_cast<std::size_t>(j) * inner);
    }
  }
}

void matmul_tn(int rows, int inner, int cols, const double* a, const double* b, double* c) {
  for (int i = 0; i < rows; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * inner;
    const double* brow = b + static_cast<std::size_t>(i) * cols;
    for (int k = 0; k < inner; ++k) {
      const double av = arow[k];
      double* crow = c + static_cast<std::size_t>(k) * cols;
      for (int j = 0; j < cols; ++j) crow[j] += av * brow[j];
    }
  }
}

void seg_sum_rows(int groups, const int* ptr, const int* idx, int cols, const double* x,
                  double* out) {
  for (int g = 0; g < groups; ++g) {
    double* dst = out + static_cast<std::size_t>(g) * cols;
    for (int j = 0; j < cols; ++j) dst[j] = 0.0;
    for (int t = ptr[g]; t < ptr[g + 1]; ++t) {
      const double* src = x + static_cast<std::size_t>(idx[t]) * cols;
      for (int j = 0; j < cols; ++j) dst[j] += src[j];
    }
  }
}

void seg_broadcast_add(int groups, const int* ptr, const int* idx, int cols, const double* src,
                       double* acc) {
  for (int g = 0; g < groups; ++g) {
    const double* s = src + static_cast<std::size_t>(g) * cols;
    for (int t = ptr[g]; t < ptr[g + 1]; ++t) {
      double* dst = acc + static_cast<std::size_t>(idx[t]) * cols;
      for (int j = 0; j < cols; ++j) dst[j] += s[j];
    }
  }
}

void gather_rows(int rows, const int* map, int cols, const double* src, double* out) {
  for (int r = 0; r < rows; ++r) {
    const double* s = src + static_cast<std::size_t>(map[r]) * cols;
    double* d = out + static_cast<std::size_t>(r) * cols;
    for (int j = 0; j < cols; ++j) d[j] = s[j];
  }
}

void scatter_add_rows(int rows, const int* map, int cols, const double* src, double* acc) {
  for (int r = 0; r < rows; ++r) {
    const double* s = src + static_cast<std::size_t>(r) * cols;
    double* d = acc + static_cast<std::size_t>(map[r]) * cols;
    for (int j = 0; j < cols; ++j) d[j] += s[j];
  }
}

void row_scale(int rows, int cols, const double* factor, double* x) {
  for (int r = 0; r < rows; ++r) {
    double* row = x + static_cast<std::size_t>(r) * cols;
    const double f = factor[r];
    for (int j = 0; j < cols; ++j) row[j] *= f;
  }
}

void pooled_mix(int nodes, int cols, const int* colmap, const int* rowmap,
                const double* col_part, const double* row_part, const double* glob_part,
                const double* self_part, const double* bias, double* out) {
  for (int t = 0; t < nodes; ++t) {
    const double* cp = col_part + static_cast<std::size_t>(colmap[t]) * cols;
    const double* rp = row_part + static_cast<std::size_t>(rowmap[t]) * cols;
    const double* sp = self_part + static_cast<std::size_t>(t) * cols;
    double* dst = out + static_cast<std::size_t>(t) * cols;
    for (int j = 0; j < cols; ++j) {
      const double z = (((cp[j] + rp[j]) + glob_part[j]) + sp[j]) + bias[j];
      dst[j] = z > 0.0 ? z : 0.0;
    }
  }
}

void adam_update(int n, double* p, const double* g, double* m, double* v, double* vmax,
                 double beta1, double beta2, double step_size, double inv_sqrt_bc2, double eps) {
  const double one_m_b1 = 1.0 - beta1;
  const double one_m_b2 = 1.0 - beta2;
  for (int i = 0; i < n; ++i) {
    const double gi = g[i];
    m[i] = beta1 * m[i] + one_m_b1 * gi;
    v[i] = beta2 * v[i] + one_m_b2 * (gi * gi);
    if (v[i] > vmax[i]) vmax[i] = v[i];
    const double denom = std::sqrt(vmax[i]) * inv_sqrt_bc2 + eps;
    p[i] -= step_size * (m[i] / denom);
  }
}

}  // namespace

const Backend& scalar_backend() {
  static const Backend backend = {
      "scalar",    axpy,       vadd,
      vscale,      relu,       relu_grad,
      matmul_nn,   matmul_nt,  matmul_tn,
      seg_sum_rows, seg_broadcast_add, gather_rows,
      scatter_add_rows, row_scale, pooled_mix, adam_update,
  };
  return backend;
}

}  // namespace hlm::kernels
