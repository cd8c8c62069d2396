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

#include <vector>

#include "hlm/model.hpp"

namespace hlm {

/// Ground-truth labels revealed for a subset of the data points.
struct LabeledSubset {
  std::vector<int> indices;          // unique, in [0, n)
  std::vector<std::int8_t> labels;   // same length; {-1,+1} in binary mode

  int size() const { return static_cast<int>(indices.size()); }
  void validate(int n) const;
};

/// round(sqrt(num_revealed)), minimum 1.
int default_finetune_epochs(int num_revealed);

/// Semi-supervised adaptation: full-batch Adam steps on the cross-entropy
/// restricted to the revealed labels, starting from `base`. The input params
/// are untouched; labels outside the subset are never read. epochs < 0
/// selects default_finetune_epochs(|subset|).
ModelParams finetune(const ModelParams& base, const LabelMatrix& x, const LabeledSubset& subset,
                     double learning_rate = 1e-4, int epochs = -1);

struct SoftLabels {
  int rows = 0;
  int num_classes = 0;
  std::vector<double> p;  // row-major, rows x num_classes, rows sum to 1

  double at(int i, int c) const { return p[static_cast<std::size_t>(i) * num_classes + c]; }
};

/// One-vs-rest decomposition for a multi-class matrix: per class c the
/// matrix is recoded (c -> +1, abstain -> 0, other -> -1), the binary model
/// scores it, and the per-class sigmoids are normalized row-wise.
SoftLabels multiclass_infer(const ModelParams& params, const LabelMatrix& x);

}  // namespace hlm
