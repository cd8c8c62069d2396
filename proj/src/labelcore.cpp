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

#include "hlm/labelcore.hpp"

#include <string>

namespace hlm {

void LabelMatrix::validate() const {
  require(rows >= 1 && cols >= 1, ErrorCode::contract,
          "label matrix must have at least one row and one column");
  require(cells.size() == static_cast<std::size_t>(rows) * cols, ErrorCode::contract,
          "label matrix cell count does not match its shape");
  if (binary()) {
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        const int v = at(i, j);
        require(v == -1 || v == 0 || v == 1, ErrorCode::contract,
                "binary label matrix entry out of {-1,0,+1} at row " + std::to_string(i) +
                    " column " + std::to_string(j));
      }
    }
  } else {
    require(num_classes >= 2, ErrorCode::contract, "multi-class matrix needs num_classes >= 2");
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        const int v = at(i, j);
        require(v >= 0 && v <= num_classes, ErrorCode::contract,
                "multi-class label matrix entry out of {0.." + std::to_string(num_classes) +
                    "} at row " + std::to_string(i) + " column " + std::to_string(j));
      }
    }
  }
}

namespace detail {

void check_binary_pair(const LabelMatrix& x, const LabelVector& y) {
  require(x.binary(), ErrorCode::contract, "operation requires a binary-mode label matrix");
  require(x.rows >= 1 && x.cols >= 1, ErrorCode::contract, "label matrix is empty");
  require(y.size() == x.rows, ErrorCode::contract,
          "label vector length " + std::to_string(y.size()) + " does not match matrix rows " +
              std::to_string(x.rows));
}

}  // namespace detail

bool lf_better_than_random(const LabelMatrix& x, const LabelVector& y, int lf, int label_class) {
  detail::check_binary_pair(x, y);
  require(lf >= 0 && lf < x.cols, ErrorCode::contract, "LF index out of range");
  require(label_class == 1 || label_class == -1, ErrorCode::contract, "class must be +1 or -1");
  int correct = 0;
  int incorrect = 0;
  for (int i = 0; i < x.rows; ++i) {
    if (y[i] != label_class) continue;
    const int v = x.at(i, lf);
    if (v == label_class) {
      ++correct;
    } else if (v == -label_class) {
      ++incorrect;
    }
  }
  return correct > incorrect;
}

bool is_valid(const LabelMatrix& x, const LabelVector& y) {
  detail::check_binary_pair(x, y);
  const int m = x.cols;
  // One pass over the cells: per-LF correct/incorrect tallies for each class.
  std::vector<int> correct_pos(m, 0), incorrect_pos(m, 0), correct_neg(m, 0), incorrect_neg(m, 0);
  for (int i = 0; i < x.rows; ++i) {
    const std::int8_t* row = x.row(i);
    const int truth = y[i];
    if (truth == 1) {
      for (int j = 0; j < m; ++j) {
        correct_pos[j] += row[j] == 1;
        incorrect_pos[j] += row[j] == -1;
      }
    } else {
      for (int j = 0; j < m; ++j) {
        correct_neg[j] += row[j] == -1;
        incorrect_neg[j] += row[j] == 1;
      }
    }
  }
  int better_pos = 0;
  int better_neg = 0;
  for (int j = 0; j < m; ++j) {
    better_pos += correct_pos[j] > incorrect_pos[j];
    better_neg += correct_neg[j] > incorrect_neg[j];
  }
  return 2 * better_pos > m && 2 * better_neg > m;
}

ProbVector majority_vote(const LabelMatrix& x) {
  require(x.binary(), ErrorCode::contract, "majority vote requires a binary-mode label matrix");
  x.validate();
  ProbVector out;
  out.probs.resize(x.rows);
  for (int i = 0; i < x.rows; ++i) {
    int pos = 0;
    int neg = 0;
    const std::int8_t* row = x.row(i);
    for (int j = 0; j < x.cols; ++j) {
      pos += row[j] == 1;
      neg += row[j] == -1;
    }
    out.probs[i] = (pos + neg == 0) ? 0.5 : static_cast<double>(pos) / (pos + neg);
  }
  return out;
}

LabelVector threshold_labels(const ProbVector& p, double threshold) {
  LabelVector out;
  out.labels.resize(p.size());
  for (int i = 0; i < p.size(); ++i) out.labels[i] = p[i] >= threshold ? 1 : -1;
  return out;
}

}  // namespace hlm
