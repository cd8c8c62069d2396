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

#include "hlm/tape.hpp"

#include <cmath>

#include "hlm/errors.hpp"
#include "hlm/kernels.hpp"

namespace hlm {

double stable_sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_from_logit(double z, double target01) {
  // max(z,0) - z*t + log1p(exp(-|z|)); never saturates.
  return (z > 0.0 ? z : 0.0) - z * target01 + std::log1p(std::exp(-std::fabs(z)));
}

const char* Tape::op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::matmul: return "matmul";
    case Op::add_bias: return "add_bias";
    case Op::add: return "add";
    case Op::relu: return "relu";
    case Op::sigmoid: return "sigmoid";
    case Op::concat_cols: return "concat_cols";
    case Op::group_mean: return "group_mean";
    case Op::take_rows: return "take_rows";
    case Op::scale: return "scale";
    case Op::pooled_mix: return "pooled_mix";
    case Op::bce_logits: return "bce_with_logits_mean";
  }
  return "?";
}

NodeId Tape::push(Node&& node) {
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::leaf;
  n.value = std::move(value);
  n.needs_grad = requires_grad;
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require(ta.cols == tb.rows, ErrorCode::contract, "matmul: inner dimensions differ");
  Node n;
  n.op = Op::matmul;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.value = Tensor(ta.rows, tb.cols);
  kernels::active().matmul_nn(ta.rows, ta.cols, tb.cols, ta.data(), tb.data(), n.value.data());
  return push(std::move(n));
}

NodeId Tape::add_bias(NodeId a, NodeId bias) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(bias);
  require(tb.rows == 1 && tb.cols == ta.cols, ErrorCode::contract, "add_bias: bias must be 1 x cols");
  Node n;
  n.op = Op::add_bias;
  n.a = a;
  n.b = bias;
  n.needs_grad = at(a).needs_grad || at(bias).needs_grad;
  n.value = ta;
  for (int r = 0; r < ta.rows; ++r) kernels::active().vadd(ta.cols, tb.data(), n.value.row(r));
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require(ta.same_shape(tb), ErrorCode::contract, "add: shape mismatch");
  Node n;
  n.op = Op::add;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.value = ta;
  kernels::active().vadd(static_cast<int>(ta.size()), tb.data(), n.value.data());
  return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::relu;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(ta.rows, ta.cols);
  kernels::active().relu(static_cast<int>(ta.size()), ta.data(), n.value.data());
  return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId a) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::sigmoid;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(ta.rows, ta.cols);
  for (std::size_t i = 0; i < ta.size(); ++i) n.value.v[i] = stable_sigmoid(ta.v[i]);
  return push(std::move(n));
}

NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
  require(!parts.empty(), ErrorCode::contract, "concat_cols: no inputs");
  const int rows = value(parts[0]).rows;
  int total = 0;
  bool needs = false;
  for (NodeId p : parts) {
    require(value(p).rows == rows, ErrorCode::contract, "concat_cols: row counts differ");
    total += value(p).cols;
    needs = needs || at(p).needs_grad;
  }
  Node n;
  n.op = Op::concat_cols;
  n.parts = parts;
  n.needs_grad = needs;
  n.value = Tensor(rows, total);
  int off = 0;
  for (NodeId p : parts) {
    const Tensor& t = value(p);
    for (int r = 0; r < rows; ++r) {
      double* dst = n.value.row(r) + off;
      const double* src = t.row(r);
      for (int j = 0; j < t.cols; ++j) dst[j] = src[j];
    }
    off += t.cols;
  }
  return push(std::move(n));
}

NodeId Tape::group_mean(NodeId a, std::shared_ptr<const GroupIndex> groups) {
  const Tensor& ta = value(a);
  const int g = groups->groups();
  for (int i = 0; i < g; ++i) {
    require(groups->group_size(i) > 0, ErrorCode::contract, "group_mean: empty group");
  }
  Node n;
  n.op = Op::group_mean;
  n.a = a;
  n.groups = std::move(groups);
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(g, ta.cols);
  kernels::active().seg_sum_rows(g, n.groups->ptr.data(), n.groups->idx.data(), ta.cols, ta.data(),
                                 n.value.data());
  std::vector<double> inv(g);
  for (int i = 0; i < g; ++i) inv[i] = 1.0 / n.groups->group_size(i);
  kernels::active().row_scale(g, ta.cols, inv.data(), n.value.data());
  return push(std::move(n));
}

NodeId Tape::take_rows(NodeId a, std::shared_ptr<const std::vector<int>> map) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::take_rows;
  n.a = a;
  n.row_map = std::move(map);
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(static_cast<int>(n.row_map->size()), ta.cols);
  kernels::active().gather_rows(static_cast<int>(n.row_map->size()), n.row_map->data(), ta.cols,
                                ta.data(), n.value.data());
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double factor) {
  Node n;
  n.op = Op::scale;
  n.a = a;
  n.factor = factor;
  n.needs_grad = at(a).needs_grad;
  n.value = value(a);
  kernels::active().vscale(static_cast<int>(n.value.size()), factor, n.value.data());
  return push(std::move(n));
}

NodeId Tape::pooled_mix(NodeId col_part, NodeId row_part, NodeId glob_part, NodeId self_part,
                        NodeId bias, std::shared_ptr<const std::vector<int>> colmap,
                        std::shared_ptr<const std::vector<int>> rowmap) {
  const Tensor& cp = value(col_part);
  const Tensor& rp = value(row_part);
  const Tensor& gp = value(glob_part);
  const Tensor& sp = value(self_part);
  const Tensor& bp = value(bias);
  const int cols = sp.cols;
  const int nodes = sp.rows;
  require(cp.cols == cols && rp.cols == cols && gp.cols == cols && bp.cols == cols,
          ErrorCode::contract, "pooled_mix: width mismatch");
  require(gp.rows == 1 && bp.rows == 1, ErrorCode::contract,
          "pooled_mix: glob and bias must be single rows");
  require(static_cast<int>(colmap->size()) == nodes && static_cast<int>(rowmap->size()) == nodes,
          ErrorCode::contract, "pooled_mix: map length mismatch");

  Node n;
  n.op = Op::pooled_mix;
  n.parts = {col_part, row_part, glob_part, self_part, bias};
  n.col_map = std::move(colmap);
  n.row_map = std::move(rowmap);
  n.needs_grad = at(col_part).needs_grad || at(row_part).needs_grad ||
                 at(glob_part).needs_grad || at(self_part).needs_grad || at(bias).needs_grad;
  n.value = Tensor(nodes, cols);
  kernels::active().pooled_mix(nodes, cols, n.col_map->data(), n.row_map->data(), cp.data(),
                               rp.data(), gp.data(), sp.data(), bp.data(), n.value.data());
  return push(std::move(n));
}

NodeId Tape::bce_with_logits_mean(NodeId logits, std::vector<double> targets01, int pad_rows) {
  const Tensor& tz = value(logits);
  require(tz.cols == 1, ErrorCode::contract, "bce: logits must be a column");
  require(static_cast<int>(targets01.size()) == tz.rows, ErrorCode::contract,
          "bce: target count does not match logit count");
  require(pad_rows >= 0, ErrorCode::contract, "bce: negative pad");
  require(tz.rows + pad_rows > 0, ErrorCode::contract, "bce: empty loss");
  Node n;
  n.op = Op::bce_logits;
  n.a = logits;
  n.needs_grad = at(logits).needs_grad;
  n.targets = std::move(targets01);
  n.pad_rows = pad_rows;
  double sum = 0.0;
  for (int r = 0; r < tz.rows; ++r) sum += bce_from_logit(tz.v[r], n.targets[r]);
  sum += pad_rows * std::log(2.0);
  n.value = Tensor(1, 1);
  n.value.v[0] = sum / (tz.rows + pad_rows);
  return push(std::move(n));
}

const Tensor& Tape::grad(NodeId id) const {
  require(nodes_[id].grad.size() > 0, ErrorCode::contract, "gradient not computed for this node");
  return nodes_[id].grad;
}

Tensor& Tape::grad_buffer(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Tensor(n.value.rows, n.value.cols);
  return n.grad;
}

void Tape::backward(NodeId root) {
  require(root >= 0 && root < num_nodes(), ErrorCode::contract, "backward: bad root");
  require(value(root).size() == 1, ErrorCode::contract, "backward: root must be scalar");
  grad_buffer(root).v[0] = 1.0;
  for (NodeId id = root; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    backward_node(id);
  }
}

void Tape::backward_node(NodeId id) {
  Node& n = nodes_[id];
  const Tensor& dy = n.grad;
  const auto& k = kernels::active();
  auto want = [&](NodeId p) { return p >= 0 && nodes_[p].needs_grad; };

  switch (n.op) {
    case Op::leaf:
      break;
    case Op::matmul: {
      const Tensor& a = nodes_[n.a].value;
      const Tensor& b = nodes_[n.b].value;
      if (want(n.a)) {
        k.matmul_nt(a.rows, b.cols, a.cols, dy.data(), b.data(), grad_buffer(n.a).data());
      }
      if (want(n.b)) {
        k.matmul_tn(a.rows, a.cols, b.cols, a.data(), dy.data(), grad_buffer(n.b).data());
      }
      break;
    }
    case Op::add_bias: {
      if (want(n.a)) {
        k.vadd(static_cast<int>(dy.size()), dy.data(), grad_buffer(n.a).data());
      }
      if (want(n.b)) {
        Tensor& db = grad_buffer(n.b);
        for (int r = 0; r < dy.rows; ++r) k.vadd(dy.cols, dy.row(r), db.data());
      }
      break;
    }
    case Op::add: {
      if (want(n.a)) k.vadd(static_cast<int>(dy.size()), dy.data(), grad_buffer(n.a).data());
      if (want(n.b)) k.vadd(static_cast<int>(dy.size()), dy.data(), grad_buffer(n.b).data());
      break;
    }
    case Op::relu: {
      if (want(n.a)) {
        k.relu_grad(static_cast<int>(dy.size()), n.value.data(), dy.data(),
                    grad_buffer(n.a).data());
      }
      break;
    }
    case Op::sigmoid: {
      if (want(n.a)) {
        Tensor& dx = grad_buffer(n.a);
        for (std::size_t i = 0; i < dy.size(); ++i) {
          const double s = n.value.v[i];
          dx.v[i] += dy.v[i] * s * (1.0 - s);
        }
      }
      break;
    }
    case Op::concat_cols: {
      int off = 0;
      for (NodeId p : n.parts) {
        const Tensor& tp = nodes_[p].value;
        if (want(p)) {
          Tensor& dp = grad_buffer(p);
          for (int r = 0; r < dy.rows; ++r) k.vadd(tp.cols, dy.row(r) + off, dp.row(r));
        }
        off += tp.cols;
      }
      break;
    }
    case Op::group_mean: {
      if (want(n.a)) {
        Tensor scaled = dy;
        std::vector<double> inv(n.groups->groups());
        for (int g = 0; g < n.groups->groups(); ++g) inv[g] = 1.0 / n.groups->group_size(g);
        k.row_scale(scaled.rows, scaled.cols, inv.data(), scaled.data());
        k.seg_broadcast_add(n.groups->groups(), n.groups->ptr.data(), n.groups->idx.data(),
                            scaled.cols, scaled.data(), grad_buffer(n.a).data());
      }
      break;
    }
    case Op::take_rows: {
      if (want(n.a)) {
        k.scatter_add_rows(dy.rows, n.row_map->data(), dy.cols, dy.data(),
                           grad_buffer(n.a).data());
      }
      break;
    }
    case Op::scale: {
      if (want(n.a)) {
        k.axpy(static_cast<int>(dy.size()), n.factor, dy.data(), grad_buffer(n.a).data());
      }
      break;
    }
    case Op::pooled_mix: {
      // mask by the relu, then route to the five inputs
      Tensor dz(dy.rows, dy.cols);
      k.relu_grad(static_cast<int>(dy.size()), n.value.data(), dy.data(), dz.data());
      const NodeId col_part = n.parts[0];
      const NodeId row_part = n.parts[1];
      const NodeId glob_part = n.parts[2];
      const NodeId self_part = n.parts[3];
      const NodeId bias = n.parts[4];
      if (want(col_part)) {
        k.scatter_add_rows(dz.rows, n.col_map->data(), dz.cols, dz.data(),
                           grad_buffer(col_part).data());
      }
      if (want(row_part)) {
        k.scatter_add_rows(dz.rows, n.row_map->data(), dz.cols, dz.data(),
                           grad_buffer(row_part).data());
      }
      if (want(glob_part) || want(bias)) {
        Tensor sum(1, dz.cols);
        for (int r = 0; r < dz.rows; ++r) k.vadd(dz.cols, dz.row(r), sum.data());
        if (want(glob_part)) {
          k.vadd(dz.cols, sum.data(), grad_buffer(glob_part).data());
        }
        if (want(bias)) k.vadd(dz.cols, sum.data(), grad_buffer(bias).data());
      }
      if (want(self_part)) {
        k.vadd(static_cast<int>(dz.size()), dz.data(), grad_buffer(self_part).data());
      }
      break;
    }
    case Op::bce_logits: {
      if (want(n.a)) {
        const Tensor& z = nodes_[n.a].value;
        Tensor& dz = grad_buffer(n.a);
        const double scale = dy.v[0] / (z.rows + n.pad_rows);
        for (int r = 0; r < z.rows; ++r) {
          dz.v[r] += scale * (stable_sigmoid(z.v[r]) - n.targets[r]);
        }
      }
      break;
    }
  }
}

std::optional<std::string> Tape::find_nonfinite() const {
  for (NodeId id = 0; id < num_nodes(); ++id) {
    const Node& n = nodes_[id];
    for (double x : n.value.v) {
      if (!std::isfinite(x)) {
        return "non-finite value in op '" + std::string(op_name(n.op)) + "' (node " +
               std::to_string(id) + ")";
      }
    }
    for (double x : n.grad.v) {
      if (!std::isfinite(x)) {
        return "non-finite gradient in op '" + std::string(op_name(n.op)) + "' (node " +
               std::to_string(id) + ")";
      }
    }
  }
  return std::nullopt;
}

void Tape::clear() { nodes_.clear(); }

}  // namespace hlm
