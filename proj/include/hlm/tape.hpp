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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hlm/tensor.hpp"

namespace hlm {

/// CSR-style grouping of row indices: group g covers idx[ptr[g] .. ptr[g+1]).
struct GroupIndex {
  std::vector<int> ptr;  // size groups()+1
  std::vector<int> idx;

  int groups() const { return static_cast<int>(ptr.size()) - 1; }
  int group_size(int g) const { return ptr[g + 1] - ptr[g]; }
};

using NodeId = int;

/// Reverse-mode tape over Tensor values. Records a DAG during the forward
/// pass; backward() walks it once in reverse creation order, accumulating
/// gradients additively across fan-out. Single-threaded per instance.
class Tape {
 public:
  NodeId leaf(Tensor value, bool requires_grad = false);

  /// c = a * b
  NodeId matmul(NodeId a, NodeId b);
  /// out[r,:] = a[r,:] + bias[0,:]
  NodeId add_bias(NodeId a, NodeId bias);
  NodeId add(NodeId a, NodeId b);
  NodeId relu(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId concat_cols(const std::vector<NodeId>& parts);
  /// out[g,:] = mean over the group's rows of a. Every group must be
  /// non-empty; the divisor is the explicit member count.
  NodeId group_mean(NodeId a, std::shared_ptr<const GroupIndex> groups);
  /// out[r,:] = a[map[r],:]
  NodeId take_rows(NodeId a, std::shared_ptr<const std::vector<int>> map);
  NodeId scale(NodeId a, double factor);

  /// Fused message-mix: per node t,
  ///   relu(col[colmap[t],:] + row[rowmap[t],:] + glob[0,:] + self[t,:]
  ///        + bias[0,:]).
  /// Spares the 4d-wide concatenation that a concat + matmul would build.
  NodeId pooled_mix(NodeId col_part, NodeId row_part, NodeId glob_part, NodeId self_part,
                    NodeId bias, std::shared_ptr<const std::vector<int>> colmap,
                    std::shared_ptr<const std::vector<int>> rowmap);

  /// Mean binary cross-entropy against 0/1 targets, computed from logits in
  /// the fused numerically-stable form. `pad_rows` rows with no logit
  /// contribute the uninformative ln 2 each; the mean divides by
  /// rows(logits) + pad_rows. Returns a 1 x 1 node.
  NodeId bce_with_logits_mean(NodeId logits, std::vector<double> targets01, int pad_rows = 0);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  const Tensor& grad(NodeId id) const;

  /// Seeds d(root)=1 and accumulates gradients for every node that
  /// (transitively) requires them. `root` must be scalar.
  void backward(NodeId root);

  /// Scans values and gradients for NaN/Inf; returns a description of the
  /// first offending op, if any. Meant for diagnosing divergence.
  std::optional<std::string> find_nonfinite() const;

  void clear();
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op {
    leaf,
    matmul,
    add_bias,
    add,
    relu,
    sigmoid,
    concat_cols,
    group_mean,
    take_rows,
    scale,
    pooled_mix,
    bce_logits,
  };

  struct Node {
    Op op;
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    NodeId a = -1, b = -1;
    std::vector<NodeId> parts;                        // concat_cols, pooled_mix
    std::shared_ptr<const GroupIndex> groups;         // group_mean
    std::shared_ptr<const std::vector<int>> row_map;  // take_rows, pooled_mix
    std::shared_ptr<const std::vector<int>> col_map;  // pooled_mix
    double factor = 0.0;                              // scale
    std::vector<double> targets;                      // bce_logits
    int pad_rows = 0;                                 // bce_logits
  };

  static const char* op_name(Op op);
  NodeId push(Node&& node);
  Node& at(NodeId id) { return nodes_[id]; }
  Tensor& grad_buffer(NodeId id);
  void backward_node(NodeId id);

  std::vector<Node> nodes_;
};

/// Stable logistic helpers shared by the tape and the inference path.
double stable_sigmoid(double z);
double bce_from_logit(double z, double target01);

}  // namespace hlm
