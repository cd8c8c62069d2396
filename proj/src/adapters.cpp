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

#include "hlm/adapters.hpp"

#include <cmath>
#include <unordered_set>

#include "hlm/adam.hpp"

namespace hlm {

void LabeledSubset::validate(int n) const {
  require(!indices.empty(), ErrorCode::contract, "labeled subset is empty");
  require(indices.size() == labels.size(), ErrorCode::contract,
          "labeled subset: index/label counts differ");
  std::unordered_set<int> seen;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    require(indices[k] >= 0 && indices[k] < n, ErrorCode::contract,
            "labeled subset: index " + std::to_string(indices[k]) + " out of range [0," +
                std::to_string(n) + ")");
    require(seen.insert(indices[k]).second, ErrorCode::contract,
            "labeled subset: duplicate index " + std::to_string(indices[k]));
    require(labels[k] == 1 || labels[k] == -1, ErrorCode::contract,
            "labeled subset: label must be -1 or +1");
  }
}

int default_finetune_epochs(int num_revealed) {
  return std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(num_revealed)))));
}

ModelParams finetune(const ModelParams& base, const LabelMatrix& x, const LabeledSubset& subset,
                     double learning_rate, int epochs) {
  require(x.binary(), ErrorCode::contract, "finetune requires a binary-mode label matrix");
  x.validate();
  subset.validate(x.rows);
  if (epochs < 0) epochs = default_finetune_epochs(subset.size());

  ModelParams params = base;
  if (epochs == 0) return params;

  const GraphView g = encode(x);

  // Position of each revealed row among the rows that carry logits; rows
  // whose LFs all abstain predict a constant 0.5 and enter the loss as pads.
  std::vector<int> logit_pos(x.rows, -1);
  for (std::size_t r = 0; r < g.occupied_rows.size(); ++r) logit_pos[g.occupied_rows[r]] = static_cast<int>(r);
  auto pick = std::make_shared<std::vector<int>>();
  std::vector<double> targets;
  int pad = 0;
  for (int k = 0; k < subset.size(); ++k) {
    const int row = subset.indices[k];
    if (logit_pos[row] < 0) {
      ++pad;
      continue;
    }
    pick->push_back(logit_pos[row]);
    targets.push_back(subset.labels[k] == 1 ? 1.0 : 0.0);
  }
  require(!pick->empty(), ErrorCode::contract,
          "every revealed data point abstains on all LFs; nothing to fit");

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = learning_rate;
  AdamState adam(param_count(params), adam_cfg);
  std::vector<double> flat = flatten_params(params);
  std::vector<double> grads(flat.size());

  Tape tape;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    tape.clear();
    const RecordedForward rec = record_forward(tape, params, g);
    const NodeId sub_logits = tape.take_rows(rec.logits, pick);
    const NodeId loss = tape.bce_with_logits_mean(sub_logits, targets, pad);
    require(std::isfinite(tape.value(loss).v[0]), ErrorCode::contract,
            "finetune: non-finite loss");
    tape.backward(loss);
    grads.clear();
    for (NodeId leaf : rec.param_leaves) {
      const Tensor& grad = tape.grad(leaf);
      grads.insert(grads.end(), grad.v.begin(), grad.v.end());
    }
    adam.step(flat, grads);
    unflatten_params(params, flat);
  }
  return params;
}

SoftLabels multiclass_infer(const ModelParams& params, const LabelMatrix& x) {
  require(!x.binary() && x.num_classes >= 2, ErrorCode::contract,
          "multiclass_infer requires a multi-class matrix with C >= 2");
  x.validate();
  const int n = x.rows;
  const int classes = x.num_classes;

  SoftLabels out;
  out.rows = n;
  out.num_classes = classes;
  out.p.resize(static_cast<std::size_t>(n) * classes);

  LabelMatrix recoded(n, x.cols);
  for (int c = 1; c <= classes; ++c) {
    for (std::size_t cell = 0; cell < x.cells.size(); ++cell) {
      const int v = x.cells[cell];
      recoded.cells[cell] = static_cast<std::int8_t>(v == 0 ? 0 : (v == c ? 1 : -1));
    }
    const ProbVector probs = forward(params, recoded);
    for (int i = 0; i < n; ++i) out.p[static_cast<std::size_t>(i) * classes + (c - 1)] = probs[i];
  }

  // Sigmoid outputs are strictly positive, so the row sums never vanish.
  for (int i = 0; i < n; ++i) {
    double* row = out.p.data() + static_cast<std::size_t>(i) * classes;
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) sum += row[c];
    for (int c = 0; c < classes; ++c) row[c] /= sum;
  }
  return out;
}

}  // namespace hlm
