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

#include "hlm/model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "hlm/kernels.hpp"
#include "hlm/rng.hpp"

namespace hlm {

GraphView encode(const LabelMatrix& x) {
  require(x.binary(), ErrorCode::contract, "graph encoding requires a binary-mode label matrix");
  x.validate();

  GraphView g;
  g.n = x.rows;
  g.m = x.cols;
  for (int i = 0; i < x.rows; ++i) {
    const std::int8_t* row = x.row(i);
    for (int j = 0; j < x.cols; ++j) {
      if (row[j] == 0) continue;
      g.node_row.push_back(i);
      g.node_col.push_back(j);
      g.node_value.push_back(row[j] == 1 ? 0 : 1);
    }
  }
  g.num_nodes = static_cast<int>(g.node_row.size());

  // Compact ids for occupied rows/columns, both in ascending original order.
  std::vector<int> row_id(x.rows, -1), col_id(x.cols, -1);
  for (int t = 0; t < g.num_nodes; ++t) {
    if (row_id[g.node_row[t]] < 0) {
      row_id[g.node_row[t]] = static_cast<int>(g.occupied_rows.size());
      g.occupied_rows.push_back(g.node_row[t]);
    }
    col_id[g.node_col[t]] = 0;
  }
  for (int j = 0; j < x.cols; ++j) {
    if (col_id[j] == 0) {
      col_id[j] = static_cast<int>(g.occupied_cols.size());
      g.occupied_cols.push_back(j);
    }
  }

  auto row_compact = std::make_shared<std::vector<int>>(g.num_nodes);
  auto col_compact = std::make_shared<std::vector<int>>(g.num_nodes);
  for (int t = 0; t < g.num_nodes; ++t) {
    (*row_compact)[t] = row_id[g.node_row[t]];
    (*col_compact)[t] = col_id[g.node_col[t]];
  }
  g.node_row_compact = row_compact;
  g.node_col_compact = col_compact;
  g.node_value_map = std::make_shared<const std::vector<int>>(g.node_value);

  // Row groups: nodes are already in row-major order, so runs are contiguous.
  auto rows = std::make_shared<GroupIndex>();
  rows->ptr.assign(g.occupied_rows.size() + 1, 0);
  for (int t = 0; t < g.num_nodes; ++t) rows->ptr[(*row_compact)[t] + 1]++;
  for (std::size_t r = 1; r < rows->ptr.size(); ++r) rows->ptr[r] += rows->ptr[r - 1];
  rows->idx.resize(g.num_nodes);
  {
    std::vector<int> cursor(rows->ptr.begin(), rows->ptr.end() - 1);
    for (int t = 0; t < g.num_nodes; ++t) rows->idx[cursor[(*row_compact)[t]]++] = t;
  }
  g.row_groups = rows;

  // Column groups via counting sort.
  auto cols = std::make_shared<GroupIndex>();
  cols->ptr.assign(g.occupied_cols.size() + 1, 0);
  for (int t = 0; t < g.num_nodes; ++t) cols->ptr[(*col_compact)[t] + 1]++;
  for (std::size_t c = 1; c < cols->ptr.size(); ++c) cols->ptr[c] += cols->ptr[c - 1];
  cols->idx.resize(g.num_nodes);
  {
    std::vector<int> cursor(cols->ptr.begin(), cols->ptr.end() - 1);
    for (int t = 0; t < g.num_nodes; ++t) cols->idx[cursor[(*col_compact)[t]]++] = t;
  }
  g.col_groups = cols;

  auto whole = std::make_shared<GroupIndex>();
  whole->ptr = {0, g.num_nodes};
  whole->idx.resize(g.num_nodes);
  for (int t = 0; t < g.num_nodes; ++t) whole->idx[t] = t;
  g.whole_graph = whole;

  return g;
}

ModelParams init_params(int k_layers, int dim, std::uint64_t seed) {
  require(k_layers >= 1 && dim >= 1, ErrorCode::contract, "need k_layers >= 1 and dim >= 1");
  Rng rng(seed);
  ModelParams p;
  p.k_layers = k_layers;
  p.dim = dim;
  p.value_emb = uniform_tensor(rng, 2, dim, 1.0);
  // Fan-in-scaled uniform bounds. Each message map composes with a mixer
  // block, so the pair shares the variance budget: with both bounds at
  // g/sqrt(d), the self path keeps activations at scale across layers
  // under the ReLU instead of collapsing them.
  const double msg_bound = 1.8 / std::sqrt(static_cast<double>(dim));
  const double relu_bound = std::sqrt(6.0 / dim);  // single linear + relu
  const double unit_bound = 1.0 / std::sqrt(static_cast<double>(dim));
  p.layers.resize(k_layers);
  for (auto& layer : p.layers) {
    layer.w_col = uniform_tensor(rng, dim, dim, msg_bound);
    layer.w_row = uniform_tensor(rng, dim, dim, msg_bound);
    layer.w_glob = uniform_tensor(rng, dim, dim, msg_bound);
    layer.w_self = uniform_tensor(rng, dim, dim, msg_bound);
    layer.mix_col = uniform_tensor(rng, dim, dim, msg_bound);
    layer.mix_row = uniform_tensor(rng, dim, dim, msg_bound);
    layer.mix_glob = uniform_tensor(rng, dim, dim, msg_bound);
    layer.mix_self = uniform_tensor(rng, dim, dim, msg_bound);
    layer.bias = uniform_tensor(rng, 1, dim, unit_bound);
  }
  p.head.w1 = uniform_tensor(rng, dim, dim, relu_bound);
  p.head.b1 = uniform_tensor(rng, 1, dim, unit_bound);
  p.head.w2 = uniform_tensor(rng, dim, dim, relu_bound);
  p.head.b2 = uniform_tensor(rng, 1, dim, unit_bound);
  p.head.w3 = uniform_tensor(rng, dim, 1, unit_bound);
  p.head.b3 = uniform_tensor(rng, 1, 1, unit_bound);
  return p;
}

void for_each_tensor(ModelParams& p, const std::function<void(Tensor&)>& fn) {
  fn(p.value_emb);
  for (auto& layer : p.layers) {
    fn(layer.w_col);
    fn(layer.w_row);
    fn(layer.w_glob);
    fn(layer.w_self);
    fn(layer.mix_col);
    fn(layer.mix_row);
    fn(layer.mix_glob);
    fn(layer.mix_self);
    fn(layer.bias);
  }
  fn(p.head.w1);
  fn(p.head.b1);
  fn(p.head.w2);
  fn(p.head.b2);
  fn(p.head.w3);
  fn(p.head.b3);
}

void for_each_tensor(const ModelParams& p, const std::function<void(const Tensor&)>& fn) {
  for_each_tensor(const_cast<ModelParams&>(p), [&](Tensor& t) { fn(t); });
}

std::size_t param_count(const ModelParams& p) {
  std::size_t count = 0;
  for_each_tensor(p, [&](const Tensor& t) { count += t.size(); });
  return count;
}

std::vector<double> flatten_params(const ModelParams& p) {
  std::vector<double> flat;
  flat.reserve(param_count(p));
  for_each_tensor(p, [&](const Tensor& t) { flat.insert(flat.end(), t.v.begin(), t.v.end()); });
  return flat;
}

void unflatten_params(ModelParams& p, const std::vector<double>& flat) {
  require(flat.size() == param_count(p), ErrorCode::contract, "flat parameter size mismatch");
  std::size_t off = 0;
  for_each_tensor(p, [&](Tensor& t) {
    std::copy(flat.begin() + off, flat.begin() + off + t.size(), t.v.begin());
    off += t.size();
  });
}

namespace {

nlohmann::json tensor_to_json(const Tensor& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < t.rows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < t.cols; ++c) row.push_back(t.at(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Tensor tensor_from_json(const nlohmann::json& j, int rows, int cols, const std::string& name) {
  require(j.is_array() && static_cast<int>(j.size()) == rows, ErrorCode::parse,
          "model file: shape mismatch in '" + name + "'");
  Tensor t(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto& row = j[r];
    require(row.is_array() && static_cast<int>(row.size()) == cols, ErrorCode::parse,
            "model file: shape mismatch in '" + name + "'");
    for (int c = 0; c < cols; ++c) {
      require(row[c].is_number(), ErrorCode::parse,
              "model file: non-numeric entry in '" + name + "'");
      t.at(r, c) = row[c].get<double>();
      require(std::isfinite(t.at(r, c)), ErrorCode::parse,
              "model file: non-finite entry in '" + name + "'");
    }
  }
  return t;
}

}  // namespace

void save_params(const std::string& path, const ModelParams& p) {
  nlohmann::json j;
  j["format_version"] = ModelParams::kFormatVersion;
  j["k_layers"] = p.k_layers;
  j["dim"] = p.dim;
  j["value_embedding"] = tensor_to_json(p.value_emb);
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : p.layers) {
    nlohmann::json l;
    l["w_col"] = tensor_to_json(layer.w_col);
    l["w_row"] = tensor_to_json(layer.w_row);
    l["w_glob"] = tensor_to_json(layer.w_glob);
    l["w_self"] = tensor_to_json(layer.w_self);
    l["mix_col"] = tensor_to_json(layer.mix_col);
    l["mix_row"] = tensor_to_json(layer.mix_row);
    l["mix_glob"] = tensor_to_json(layer.mix_glob);
    l["mix_self"] = tensor_to_json(layer.mix_self);
    l["bias"] = tensor_to_json(layer.bias);
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  nlohmann::json head;
  head["w1"] = tensor_to_json(p.head.w1);
  head["b1"] = tensor_to_json(p.head.b1);
  head["w2"] = tensor_to_json(p.head.w2);
  head["b2"] = tensor_to_json(p.head.b2);
  head["w3"] = tensor_to_json(p.head.w3);
  head["b3"] = tensor_to_json(p.head.b3);
  j["head"] = std::move(head);

  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::io, "cannot write model file: " + path);
  out << j.dump() << '\n';
  require(out.good(), ErrorCode::io, "write failed: " + path);
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorCode::parse, "model file: corrupt JSON in " + path + ": " + e.what());
  }
  require(j.is_object() && j.contains("format_version"), ErrorCode::parse,
          "model file: missing format_version in " + path);
  const int version = j["format_version"].get<int>();
  require(version == ModelParams::kFormatVersion, ErrorCode::parse,
          "model file: unsupported format version " + std::to_string(version) + " (expected " +
              std::to_string(ModelParams::kFormatVersion) + ")");
  require(j.contains("k_layers") && j.contains("dim") && j.contains("layers") &&
              j.contains("head") && j.contains("value_embedding"),
          ErrorCode::parse, "model file: missing fields in " + path);

  ModelParams p;
  p.k_layers = j["k_layers"].get<int>();
  p.dim = j["dim"].get<int>();
  require(p.k_layers >= 1 && p.dim >= 1, ErrorCode::parse, "model file: bad architecture shape");
  const int d = p.dim;
  p.value_emb = tensor_from_json(j["value_embedding"], 2, d, "value_embedding");
  const auto& layers = j["layers"];
  require(layers.is_array() && static_cast<int>(layers.size()) == p.k_layers, ErrorCode::parse,
          "model file: layer count does not match k_layers");
  p.layers.resize(p.k_layers);
  for (int k = 0; k < p.k_layers; ++k) {
    const auto& l = layers[k];
    const std::string tag = "layers[" + std::to_string(k) + "].";
    try {
      p.layers[k].w_col = tensor_from_json(l.at("w_col"), d, d, tag + "w_col");
      p.layers[k].w_row = tensor_from_json(l.at("w_row"), d, d, tag + "w_row");
      p.layers[k].w_glob = tensor_from_json(l.at("w_glob"), d, d, tag + "w_glob");
      p.layers[k].w_self = tensor_from_json(l.at("w_self"), d, d, tag + "w_self");
      p.layers[k].mix_col = tensor_from_json(l.at("mix_col"), d, d, tag + "mix_col");
      p.layers[k].mix_row = tensor_from_json(l.at("mix_row"), d, d, tag + "mix_row");
      p.layers[k].mix_glob = tensor_from_json(l.at("mix_glob"), d, d, tag + "mix_glob");
      p.layers[k].mix_self = tensor_from_json(l.at("mix_self"), d, d, tag + "mix_self");
      p.layers[k].bias = tensor_from_json(l.at("bias"), 1, d, tag + "bias");
    } catch (const nlohmann::json::exception&) {
      throw_error(ErrorCode::parse, "model file: missing tensor in " + tag);
    }
  }
  const auto& head = j["head"];
  try {
    p.head.w1 = tensor_from_json(head.at("w1"), d, d, "head.w1");
    p.head.b1 = tensor_from_json(head.at("b1"), 1, d, "head.b1");
    p.head.w2 = tensor_from_json(head.at("w2"), d, d, "head.w2");
    p.head.b2 = tensor_from_json(head.at("b2"), 1, d, "head.b2");
    p.head.w3 = tensor_from_json(head.at("w3"), d, 1, "head.w3");
    p.head.b3 = tensor_from_json(head.at("b3"), 1, 1, "head.b3");
  } catch (const nlohmann::json::exception&) {
    throw_error(ErrorCode::parse, "model file: missing tensor in head");
  }
  return p;
}

namespace {

void check_model_graph(const ModelParams& p, const GraphView& g) {
  require(p.k_layers >= 1 && p.dim >= 1 && static_cast<int>(p.layers.size()) == p.k_layers,
          ErrorCode::contract, "model parameters are malformed");
  require(g.num_nodes > 0, ErrorCode::contract, "empty label matrix: every entry abstains");
}

void mean_from_groups(const GroupIndex& groups, int cols, const double* x, Tensor& out,
                      std::vector<double>& inv_scratch) {
  const auto& k = kernels::active();
  const int gcount = groups.groups();
  out.rows = gcount;
  out.cols = cols;
  out.v.resize(static_cast<std::size_t>(gcount) * cols);
  k.seg_sum_rows(gcount, groups.ptr.data(), groups.idx.data(), cols, x, out.data());
  inv_scratch.resize(gcount);
  for (int g = 0; g < gcount; ++g) inv_scratch[g] = 1.0 / groups.group_size(g);
  k.row_scale(gcount, cols, inv_scratch.data(), out.data());
}

void matmul_into(const Tensor& a, const Tensor& w, Tensor& out) {
  out.rows = a.rows;
  out.cols = w.cols;
  out.v.assign(static_cast<std::size_t>(a.rows) * w.cols, 0.0);
  kernels::active().matmul_nn(a.rows, a.cols, w.cols, a.data(), w.data(), out.data());
}

void add_bias_rows(Tensor& t, const Tensor& bias) {
  const auto& k = kernels::active();
  for (int r = 0; r < t.rows; ++r) k.vadd(t.cols, bias.data(), t.row(r));
}

void check_finite(const Tensor& t, const std::string& where) {
  for (double x : t.v) {
    require(std::isfinite(x), ErrorCode::contract, "non-finite activation in " + where);
  }
}

}  // namespace

ProbVector forward(const ModelParams& p, const GraphView& g) {
  check_model_graph(p, g);
  const auto& k = kernels::active();
  const int d = p.dim;
  const int n_nodes = g.num_nodes;

  Tensor cur(n_nodes, d);
  k.gather_rows(n_nodes, g.node_value_map->data(), d, p.value_emb.data(), cur.data());

  Tensor col_mean, row_mean, glob_mean, fold_col, fold_row, fold_glob, fold_self;
  Tensor pc, pr, pg, ps, next;
  std::vector<double> inv;
  for (int layer = 0; layer < p.k_layers; ++layer) {
    const LayerParams& lp = p.layers[layer];
    mean_from_groups(*g.col_groups, d, cur.data(), col_mean, inv);
    mean_from_groups(*g.row_groups, d, cur.data(), row_mean, inv);
    mean_from_groups(*g.whole_graph, d, cur.data(), glob_mean, inv);

    // Each message map composes with its mixer block into one d x d product
    // per layer, so per-column/per-row results broadcast straight to nodes.
    matmul_into(lp.w_col, lp.mix_col, fold_col);
    matmul_into(lp.w_row, lp.mix_row, fold_row);
    matmul_into(lp.w_glob, lp.mix_glob, fold_glob);
    matmul_into(lp.w_self, lp.mix_self, fold_self);
    matmul_into(col_mean, fold_col, pc);
    matmul_into(row_mean, fold_row, pr);
    matmul_into(glob_mean, fold_glob, pg);
    matmul_into(cur, fold_self, ps);

    next.rows = n_nodes;
    next.cols = d;
    next.v.resize(static_cast<std::size_t>(n_nodes) * d);
    k.pooled_mix(n_nodes, d, g.node_col_compact->data(), g.node_row_compact->data(), pc.data(),
                 pr.data(), pg.data(), ps.data(), lp.bias.data(), next.data());
    std::swap(cur, next);
    check_finite(cur, "message-passing layer " + std::to_string(layer));
  }

  Tensor pooled, h1, h2, logits;
  mean_from_groups(*g.row_groups, d, cur.data(), pooled, inv);
  matmul_into(pooled, p.head.w1, h1);
  add_bias_rows(h1, p.head.b1);
  k.relu(static_cast<int>(h1.size()), h1.data(), h1.data());
  matmul_into(h1, p.head.w2, h2);
  add_bias_rows(h2, p.head.b2);
  k.relu(static_cast<int>(h2.size()), h2.data(), h2.data());
  matmul_into(h2, p.head.w3, logits);
  add_bias_rows(logits, p.head.b3);
  check_finite(logits, "prediction head");

  ProbVector out;
  out.probs.assign(g.n, 0.5);
  for (std::size_t r = 0; r < g.occupied_rows.size(); ++r) {
    out.probs[g.occupied_rows[r]] = stable_sigmoid(logits.v[r]);
  }
  return out;
}

ProbVector forward(const ModelParams& p, const LabelMatrix& x) { return forward(p, encode(x)); }

RecordedForward record_forward(Tape& tape, const ModelParams& p, const GraphView& g) {
  check_model_graph(p, g);

  RecordedForward rec;
  const NodeId emb = tape.leaf(p.value_emb, true);
  rec.param_leaves.push_back(emb);
  struct LayerLeaves {
    NodeId w_col, w_row, w_glob, w_self, mix_col, mix_row, mix_glob, mix_self, bias;
  };
  std::vector<LayerLeaves> lls;
  for (const auto& layer : p.layers) {
    LayerLeaves ll;
    ll.w_col = tape.leaf(layer.w_col, true);
    ll.w_row = tape.leaf(layer.w_row, true);
    ll.w_glob = tape.leaf(layer.w_glob, true);
    ll.w_self = tape.leaf(layer.w_self, true);
    ll.mix_col = tape.leaf(layer.mix_col, true);
    ll.mix_row = tape.leaf(layer.mix_row, true);
    ll.mix_glob = tape.leaf(layer.mix_glob, true);
    ll.mix_self = tape.leaf(layer.mix_self, true);
    ll.bias = tape.leaf(layer.bias, true);
    for (NodeId id : {ll.w_col, ll.w_row, ll.w_glob, ll.w_self, ll.mix_col, ll.mix_row,
                      ll.mix_glob, ll.mix_self, ll.bias}) {
      rec.param_leaves.push_back(id);
    }
    lls.push_back(ll);
  }
  const NodeId w1 = tape.leaf(p.head.w1, true);
  const NodeId b1 = tape.leaf(p.head.b1, true);
  const NodeId w2 = tape.leaf(p.head.w2, true);
  const NodeId b2 = tape.leaf(p.head.b2, true);
  const NodeId w3 = tape.leaf(p.head.w3, true);
  const NodeId b3 = tape.leaf(p.head.b3, true);
  for (NodeId id : {w1, b1, w2, b2, w3, b3}) rec.param_leaves.push_back(id);

  NodeId cur = tape.take_rows(emb, g.node_value_map);
  for (int layer = 0; layer < p.k_layers; ++layer) {
    const LayerLeaves& ll = lls[layer];
    const NodeId col_mean = tape.group_mean(cur, g.col_groups);
    const NodeId row_mean = tape.group_mean(cur, g.row_groups);
    const NodeId glob_mean = tape.group_mean(cur, g.whole_graph);
    const NodeId fold_col = tape.matmul(ll.w_col, ll.mix_col);
    const NodeId fold_row = tape.matmul(ll.w_row, ll.mix_row);
    const NodeId fold_glob = tape.matmul(ll.w_glob, ll.mix_glob);
    const NodeId fold_self = tape.matmul(ll.w_self, ll.mix_self);
    const NodeId pc = tape.matmul(col_mean, fold_col);
    const NodeId pr = tape.matmul(row_mean, fold_row);
    const NodeId pg = tape.matmul(glob_mean, fold_glob);
    const NodeId ps = tape.matmul(cur, fold_self);
    cur = tape.pooled_mix(pc, pr, pg, ps, ll.bias, g.node_col_compact, g.node_row_compact);
  }

  const NodeId pooled = tape.group_mean(cur, g.row_groups);
  const NodeId h1 = tape.relu(tape.add_bias(tape.matmul(pooled, w1), b1));
  const NodeId h2 = tape.relu(tape.add_bias(tape.matmul(h1, w2), b2));
  rec.logits = tape.add_bias(tape.matmul(h2, w3), b3);
  return rec;
}

}  // namespace hlm
