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

#include <initializer_list>
#include <vector>

#include "hlm/labelcore.hpp"
#include "hlm/rng.hpp"

namespace hlm_test {

inline hlm::LabelMatrix matrix(std::initializer_list<std::initializer_list<int>> rows) {
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(rows.begin()->size());
  hlm::LabelMatrix x(n, m);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (int v : row) x.at(i, j++) = static_cast<std::int8_t>(v);
    ++i;
  }
  return x;
}

inline hlm::LabelVector labels(std::initializer_list<int> ys) {
  hlm::LabelVector y;
  for (int v : ys) y.labels.push_back(static_cast<std::int8_t>(v));
  return y;
}

inline hlm::LabelMatrix random_matrix(hlm::Rng& rng, int n, int m) {
  hlm::LabelMatrix x(n, m);
  for (auto& cell : x.cells) cell = static_cast<std::int8_t>(rng.uniform3());
  return x;
}

inline hlm::LabelVector random_labels(hlm::Rng& rng, int n) {
  hlm::LabelVector y;
  y.labels.resize(n);
  for (auto& v : y.labels) v = static_cast<std::int8_t>(rng.sign());
  return y;
}

inline hlm::LabelMatrix negated(const hlm::LabelMatrix& x) {
  hlm::LabelMatrix out = x;
  for (auto& cell : out.cells) cell = static_cast<std::int8_t>(-cell);
  return out;
}

inline hlm::LabelMatrix permute_rows(const hlm::LabelMatrix& x, const std::vector<int>& perm) {
  hlm::LabelMatrix out(x.rows, x.cols, x.num_classes);
  for (int i = 0; i < x.rows; ++i) {
    for (int j = 0; j < x.cols; ++j) out.at(i, j) = x.at(perm[i], j);
  }
  return out;
}

inline hlm::LabelMatrix permute_cols(const hlm::LabelMatrix& x, const std::vector<int>& perm) {
  hlm::LabelMatrix out(x.rows, x.cols, x.num_classes);
  for (int i = 0; i < x.rows; ++i) {
    for (int j = 0; j < x.cols; ++j) out.at(i, j) = x.at(i, perm[j]);
  }
  return out;
}

inline std::vector<int> random_permutation(hlm::Rng& rng, int n) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

}  // namespace hlm_test
