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

#include <cstdint>
#include <vector>

#include "hlm/errors.hpp"

namespace hlm {

/// n x m matrix of weak labels. One row per data point, one column per
/// labeling function (LF). Binary mode stores entries in {-1, 0, +1};
/// multi-class mode (num_classes = C >= 2) stores entries in {0, 1, ..., C}.
/// 0 always means the LF abstained.
struct LabelMatrix {
  int rows = 0;         // n, data points
  int cols = 0;         // m, labeling functions
  int num_classes = 0;  // 0 = binary, >= 2 = multi-class with classes 1..C
  std::vector<std::int8_t> cells;  // row-major

  LabelMatrix() = default;
  LabelMatrix(int n, int m, int classes = 0)
      : rows(n), cols(m), num_classes(classes), cells(static_cast<std::size_t>(n) * m, 0) {}

  bool binary() const { return num_classes == 0; }

  std::int8_t at(int i, int j) const { return cells[static_cast<std::size_t>(i) * cols + j]; }
  std::int8_t& at(int i, int j) { return cells[static_cast<std::size_t>(i) * cols + j]; }
  const std::int8_t* row(int i) const { return cells.data() + static_cast<std::size_t>(i) * cols; }

  /// Throws a contract error on bad shape or out-of-alphabet entries.
  void validate() const;
};

/// Length-n vector of hard labels: {-1, +1} in binary mode, {1..C} in
/// multi-class mode.
struct LabelVector {
  std::vector<std::int8_t> labels;

  LabelVector() = default;
  explicit LabelVector(std::vector<std::int8_t> v) : labels(std::move(v)) {}

  int size() const { return static_cast<int>(labels.size()); }
  std::int8_t operator[](int i) const { return labels[i]; }
};

/// Length-n per-point probability of class +1.
struct ProbVector {
  std::vector<double> probs;

  int size() const { return static_cast<int>(probs.size()); }
  double operator[](int i) const { return probs[i]; }
};

/// Whether the `lf`-th column is better than random for `label_class`
/// (+1 or -1): strictly more entries agreeing with y than contradicting it,
/// counted over the rows whose ground truth is `label_class`. Abstentions
/// count on neither side.
bool lf_better_than_random(const LabelMatrix& x, const LabelVector& y, int lf, int label_class);

/// The validity predicate: for each class, strictly more than half of the
/// LFs are better than random.
bool is_valid(const LabelMatrix& x, const LabelVector& y);

/// Majority vote over non-abstaining LFs, returned as the fraction of +1
/// votes per row. Rows with no votes (and exact ties) give 0.5.
ProbVector majority_vote(const LabelMatrix& x);

/// Hard labels from probabilities: p >= threshold -> +1, else -1.
/// Ties (p == threshold) resolve to +1 so results are deterministic.
LabelVector threshold_labels(const ProbVector& p, double threshold = 0.5);

namespace detail {
void check_binary_pair(const LabelMatrix& x, const LabelVector& y);
}

}  // namespace hlm
