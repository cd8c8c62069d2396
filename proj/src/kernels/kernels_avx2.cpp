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

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "hlm/kernels.hpp"

// AVX2 variants of the reference kernels. Bit-identical to the scalar
// backend by construction: lanes stay independent, reduction order matches
// the reference, and no FMA is used (mul then add, like the reference).
// Compiled with the `target` attribute so the rest of the binary stays
// baseline x86-64; callers must check avx2_backend() != nullptr.

#define HLM_AVX2 __attribute__((target("avx2")))

namespace hlm::kernels {
namespace {

HLM_AVX2 void axpy(int n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

HLM_AVX2 void vadd(int n, const double* x, double* y) {
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] += x[i];
}

HLM_AVX2 void vscale(int n, double a, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), va));
  }
  for (; i < n; ++i) y[i] *= a;
}

HLM_AVX2 void relu(int n, const double* x, double* y) {
  const __m256d zero = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

HLM_AVX2 void relu_grad(int n, const double* out, const double* dy, double* dx) {
  const __m256d zero = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(out + i), zero, _CMP_GT_OQ);
    const __m256d add = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
    _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), add));
  }
  for (; i < n; ++i) {
    if (out[i] > 0.0) dx[i] += dy[i];
  }
}

HLM_AVX2 inline void row_axpy(int cols, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  int j = 0;
  for (; j + 4 <= cols; j += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + j));
    _mm256_storeu_pd(y + j, _mm256_add_pd(_mm256_loadu_pd(y + j), prod));
  }
  for (; j < cols; ++j) y[j] += a * x[j];
}

// Output-row tiles stay in registers across the whole k loop; per output
// element the adds still happen in ascending k, exactly like the reference.
HLM_AVX2 void matmul_nn(int rows, int inner, int cols, const double* a, const double* b,
                        double* c) {
  for (int i = 0; i < rows; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * inner;
    double* crow = c + static_cast<std::size_t>(i) * cols;
    int j = 0;
    for (; j + 16 <= cols; j += 16) {
      __m256d acc0 = _mm256_loadu_pd(crow + j);
      __m256d acc1 = _mm256_loadu_pd(crow + j + 4);
      __m256d acc2 = _mm256_loadu_pd(crow + j + 8);
      __m256d acc3 = _mm256_loadu_pd(crow + j + 12);
      for (int k = 0; k < inner; ++k) {
        const __m256d av = _mm256_set1_pd(arow[k]);
        const double* brow = b + static_cast<std::size_t>(k) * cols + j;
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(av, _mm256_loadu_pd(brow)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 4)));
        acc2 = _mm256_add_pd(acc2, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 8)));
        acc3 = _mm256_add_pd(acc3, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 12)));
      }
      _mm256_storeu_pd(crow + j, acc0);
      _mm256_storeu_pd(crow + j + 4, acc1);
      _mm256_storeu_pd(crow + j + 8, acc2);
      _mm256_storeu_pd(crow + j + 12, acc3);
    }
    for (; j + 4 <= cols; j += 4) {
      __m256d acc = _mm256_loadu_pd(crow + j);
      for (int k = 0; k < inner; ++k) {
        const __m256d av = _mm256_set1_pd(arow[k]);
        acc = _mm256_add_pd(acc,
                            _mm256_mul_pd(av, _mm256_loadu_pd(b + static_cast<std::size_t>(k) * cols + j)));
      }
      _mm256_storeu_pd(crow + j, acc);
    }
    for (; j < cols; ++j) {
      double acc = crow[j];
      for (int k = 0; k < inner; ++k) acc += arow[k] * b[static_cast<std::size_t>(k) * cols + j];
      crow[j] = acc;
    }
  }
}

// Mirrors the reference dot4: lane l accumulates k % 4 == l, combined as
// (l0 + l2) + (l1 + l3), tail folded in sequentially.
HLM_AVX2 inline double dot4(int n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  int k = 0;
  for (; k + 4 <= n; k += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  }
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d pair = _mm_add_pd(lo, hi);  // [l0+l2, l1+l3]
  double r = _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
  for (; k < n; ++k) r += x[k] * y[k];
  return r;
}

HLM_AVX2 void matmul_nt(int rows, int inner, int cols, const double* a, const double* b,
                        double* c) {
  for (int i = 0; i < rows; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * inner;
    double* crow = c + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) {
      crow[j] += dot4(inner, arow, b + static_cast<std::size_t>(j) * inner);
    }
  }
}

HLM_AVX2 void matmul_tn(int rows, int inner, int cols, const double* a, const double* b,
                        double* c) {
  for (int i = 0; i < rows; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * inner;
    const double* brow = b + static_cast<std::size_t>(i) * cols;
    for (int k = 0; k < inner; ++k) {
      row_axpy(cols, arow[k], brow, c + static_cast<std::size_t>(k) * cols);
    }
  }
}

HLM_AVX2 void seg_sum_rows(int groups, const int* ptr, const int* idx, int cols, const double* x,
                           double* out) {
  for (int g = 0; g < groups; ++g) {
    double* dst = out + static_cast<std::size_t>(g) * cols;
    int j = 0;
    for (; j + 4 <= cols; j += 4) _mm256_storeu_pd(dst + j, _mm256_setzero_pd());
    for (; j < cols; ++j) dst[j] = 0.0;
    for (int t = ptr[g]; t < ptr[g + 1]; ++t) {
      vadd(cols, x + static_cast<std::size_t>(idx[t]) * cols, dst);
    }
  }
}

HLM_AVX2 void seg_broadcast_add(int groups, const int* ptr, const int* idx, int cols,
                                const double* src, double* acc) {
  for (int g = 0; g < groups; ++g) {
    const double* s = src + static_cast<std::size_t>(g) * cols;
    for (int t = ptr[g]; t < ptr[g + 1]; ++t) {
      vadd(cols, s, acc + static_cast<std::size_t>(idx[t]) * cols);
    }
  }
}

HLM_AVX2 void gather_rows(int rows, const int* map, int cols, const double* src, double* out) {
  for (int r = 0; r < rows; ++r) {
    const double* s = src + static_cast<std::size_t>(map[r]) * cols;
    double* d = out + static_cast<std::size_t>(r) * cols;
    int j = 0;
    for (; j + 4 <= cols; j += 4) _mm256_storeu_pd(d + j, _mm256_loadu_pd(s + j));
    for (; j < cols; ++j) d[j] = s[j];
  }
}

HLM_AVX2 void scatter_add_rows(int rows, const int* map, int cols, const double* src,
                               double* acc) {
  for (int r = 0; r < rows; ++r) {
    vadd(cols, src + static_cast<std::size_t>(r) * cols,
         acc + static_cast<std::size_t>(map[r]) * cols);
  }
}

HLM_AVX2 void row_scale(int rows, int cols, const double* factor, double* x) {
  for (int r = 0; r < rows; ++r) {
    vscale(cols, factor[r], x + static_cast<std::size_t>(r) * cols);
  }
}

HLM_AVX2 void pooled_mix(int nodes, int cols, const int* colmap, const int* rowmap,
                         const double* col_part, const double* row_part, const double* glob_part,
                         const double* self_part, const double* bias, double* out) {
  const __m256d zero = _mm256_setzero_pd();
  for (int t = 0; t < nodes; ++t) {
    const double* cp = col_part + static_cast<std::size_t>(colmap[t]) * cols;
    const double* rp = row_part + static_cast<std::size_t>(rowmap[t]) * cols;
    const double* sp = self_part + static_cast<std::size_t>(t) * cols;
    double* dst = out + static_cast<std::size_t>(t) * cols;
    int j = 0;
    for (; j + 4 <= cols; j += 4) {
      __m256d z = _mm256_add_pd(_mm256_loadu_pd(cp + j), _mm256_loadu_pd(rp + j));
      z = _mm256_add_pd(z, _mm256_loadu_pd(glob_part + j));
      z = _mm256_add_pd(z, _mm256_loadu_pd(sp + j));
      z = _mm256_add_pd(z, _mm256_loadu_pd(bias + j));
      _mm256_storeu_pd(dst + j, _mm256_max_pd(z, zero));
    }
    for (; j < cols; ++j) {
      const double z = (((cp[j] + rp[j]) + glob_part[j]) + sp[j]) + bias[j];
      dst[j] = z > 0.0 ? z : 0.0;
    }
  }
}

HLM_AVX2 void adam_update(int n, double* p, const double* g, double* m, double* v, double* vmax,
                          double beta1, double beta2, double step_size, double inv_sqrt_bc2,
                          double eps) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d v1mb1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d v1mb2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vstep = _mm256_set1_pd(step_size);
  const __m256d vinv = _mm256_set1_pd(inv_sqrt_bc2);
  const __m256d veps = _mm256_set1_pd(eps);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    __m256d mi = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(v1mb1, gi));
    __m256d vi = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                               _mm256_mul_pd(v1mb2, _mm256_mul_pd(gi, gi)));
    __m256d vm = _mm256_max_pd(_mm256_loadu_pd(vmax + i), vi);
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    _mm256_storeu_pd(vmax + i, vm);
    const __m256d denom = _mm256_add_pd(_mm256_mul_pd(_mm256_sqrt_pd(vm), vinv), veps);
    const __m256d upd = _mm256_mul_pd(vstep, _mm256_div_pd(mi, denom));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
  }
  const double one_m_b1 = 1.0 - beta1;
  const double one_m_b2 = 1.0 - beta2;
  for (; i < n; ++i) {
    const double gi = g[i];
    m[i] = beta1 * m[i] + one_m_b1 * gi;
    v[i] = beta2 * v[i] + one_m_b2 * (gi * gi);
    if (v[i] > vmax[i]) vmax[i] = v[i];
    const double denom = std::sqrt(vmax[i]) * inv_sqrt_bc2 + eps;
    p[i] -= step_size * (m[i] / denom);
  }
}

}  // namespace

const Backend* avx2_backend_impl() {
  if (!__builtin_cpu_supports("avx2")) return nullptr;
  static const Backend backend = {
      "avx2",      axpy,       vadd,
      vscale,      relu,       relu_grad,
      matmul_nn,   matmul_nt,  matmul_tn,
      seg_sum_rows, seg_broadcast_add, gather_rows,
      scatter_add_rows, row_scale, pooled_mix, adam_update,
  };
  return &backend;
}

}  // namespace hlm::kernels
