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
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hlm/labelcore.hpp"
#include "hlm/tape.hpp"
#include "hlm/tensor.hpp"

namespace hlm {

/// Graph view of a binary label matrix: one node per non-abstaining entry,
/// grouped by row (data point) and by column (LF). Rows and columns with no
/// nodes are dropped, so pooling always divides by the count of present
/// members. Nodes are stored in row-major matrix order.
struct GraphView {
  int n = 0, m = 0;   // original matrix shape
  int num_nodes = 0;

  std::vector<int> node_row, node_col;  // original indices per node
  std::vector<int> node_value;          // embedding row: 0 for +1, 1 for -1

  std::vector<int> occupied_rows;  // original row ids with >= 1 node
  std::vector<int> occupied_cols;

  // Maps and groups over the compacted (occupied) row/column ids.
  std::shared_ptr<const std::vector<int>> node_row_compact, node_col_compact;
  std::shared_ptr<const std::vector<int>> node_value_map;  // same data as node_value
  std::shared_ptr<const GroupIndex> row_groups, col_groups;
  std::shared_ptr<const GroupIndex> whole_graph;  // single group of all nodes
};

GraphView encode(const LabelMatrix& x);

struct LayerParams {
  Tensor w_col, w_row, w_glob, w_self;          // d x d message maps, no biases
  Tensor mix_col, mix_row, mix_glob, mix_self;  // d x d blocks of the 4d -> d mixer
  Tensor bias;                                  // 1 x d mixer bias
};

struct HeadParams {
  Tensor w1, b1;  // d x d, 1 x d
  Tensor w2, b2;  // d x d, 1 x d
  Tensor w3, b3;  // d x 1, 1 x 1
};

/// All learnable weights plus architecture metadata. Message-passing layer k
/// maps each node embedding to
///   relu(f_k(concat(W_col * col_mean, W_row * row_mean, W_glob * graph_mean,
///                   W_self * self)))
/// with every mean taken over present nodes (the node itself included).
/// f_k is a 4d -> d affine map stored as four d x d blocks plus a bias, so
/// the concatenation never has to be materialized: each summand W_i * mean
/// composes with its block into one d x d product per layer, and per-column/
/// per-row results broadcast to the nodes. After the last layer, per-row
/// means feed a three-layer MLP head whose final activation is a sigmoid.
struct ModelParams {
  static constexpr int kFormatVersion = 1;

  int k_layers = 0;
  int dim = 0;
  Tensor value_emb;  // 2 x d: embeddings for entry +1 (row 0) and -1 (row 1)
  std::vector<LayerParams> layers;
  HeadParams head;
};

/// Fan-in-scaled uniform initialization, deterministic per seed.
ModelParams init_params(int k_layers, int dim, std::uint64_t seed);

/// Visits every parameter tensor in the fixed flattening order.
void for_each_tensor(ModelParams& p, const std::function<void(Tensor&)>& fn);
void for_each_tensor(const ModelParams& p, const std::function<void(const Tensor&)>& fn);
std::size_t param_count(const ModelParams& p);
std::vector<double> flatten_params(const ModelParams& p);
void unflatten_params(ModelParams& p, const std::vector<double>& flat);

/// JSON model file; doubles round-trip exactly. Version, shape and syntax
/// problems raise distinct errors.
void save_params(const std::string& path, const ModelParams& p);
ModelParams load_params(const std::string& path);

/// Single forward pass (no tape). Per-layer work is linear in the number of
/// present nodes; rows with no nodes predict 0.5. Throws "empty label
/// matrix" when nothing is present, and reports the layer on non-finite
/// activations.
ProbVector forward(const ModelParams& p, const GraphView& g);
ProbVector forward(const ModelParams& p, const LabelMatrix& x);

/// Tape-recorded forward up to the pre-sigmoid logits of the occupied rows
/// (one logit per entry of g.occupied_rows, in order). `param_leaves` holds
/// the leaf ids in for_each_tensor order.
struct RecordedForward {
  NodeId logits = -1;
  std::vector<NodeId> param_leaves;
};

RecordedForward record_forward(Tape& tape, const ModelParams& p, const GraphView& g);

}  // namespace hlm
