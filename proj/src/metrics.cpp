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

#include "hlm/metrics.hpp"

namespace hlm {

double accuracy(const LabelVector& pred, const LabelVector& truth) {
  require(pred.size() == truth.size() && pred.size() > 0, ErrorCode::contract,
          "accuracy: prediction/truth length mismatch");
  int hits = 0;
  for (int i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / pred.size();
}

double f1_score(const LabelVector& pred, const LabelVector& truth, int positive) {
  require(pred.size() == truth.size() && pred.size() > 0, ErrorCode::contract,
          "f1: prediction/truth length mismatch");
  int tp = 0, fp = 0, fn = 0;
  for (int i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == positive;
    const bool t = truth[i] == positive;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / (tp + fp);
  const double recall = static_cast<double>(tp) / (tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

LabelVector argmax_labels(const SoftLabels& soft) {
  LabelVector out;
  out.labels.resize(soft.rows);
  for (int i = 0; i < soft.rows; ++i) {
    int best = 0;
    for (int c = 1; c < soft.num_classes; ++c) {
      if (soft.at(i, c) > soft.at(i, best)) best = c;
    }
    out.labels[i] = static_cast<std::int8_t>(best + 1);
  }
  return out;
}

}  // namespace hlm
