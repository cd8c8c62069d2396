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

#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "hlm/model.hpp"
#include "hlm/tape.hpp"
#include "support/builders.hpp"

using namespace hlm;
using hlm_test::random_matrix;

namespace {

// Central finite differences over a flat parameter vector.
std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> at, double h = 1e-6) {
  std::vector<double> grad(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double keep = at[i];
    at[i] = keep + h;
    const double hi = f(at);
    at[i] = keep - h;
    const double lo = f(at);
    at[i] = keep;
    grad[i] = (hi - lo) / (2.0 * h);
  }
  return grad;
}

// Near-zero components compare at scale 1e-3; the central difference itself
// carries rounding noise that a pure ratio would amplify.
double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-3});
}

}  // namespace

TEST_CASE("sigmoid derivative at zero is 1/4") {
  Tape tape;
  Tensor x(1, 1);
  const NodeId leaf = tape.leaf(x, true);
  const NodeId s = tape.sigmoid(leaf);
  CHECK(tape.value(s).v[0] == 0.5);
  tape.backward(s);
  CHECK(tape.grad(leaf).v[0] == doctest::Approx(0.25));
}

TEST_CASE("group mean spreads gradient as 1/k") {
  Tape tape;
  Tensor x(5, 1);
  for (int i = 0; i < 5; ++i) x.v[i] = i + 1.0;
  const NodeId leaf = tape.leaf(x, true);
  auto groups = std::make_shared<GroupIndex>();
  groups->ptr = {0, 5};
  groups->idx = {0, 1, 2, 3, 4};
  const NodeId mean = tape.group_mean(leaf, groups);
  CHECK(tape.value(mean).v[0] == doctest::Approx(3.0));
  tape.backward(mean);
  for (int i = 0; i < 5; ++i) CHECK(tape.grad(leaf).v[i] == doctest::Approx(0.2));
}

TEST_CASE("singleton group mean is the identity") {
  Tape tape;
  Tensor x(1, 3);
  x.v = {0.5, -1.0, 2.0};
  const NodeId leaf = tape.leaf(x, true);
  auto groups = std::make_shared<GroupIndex>();
  groups->ptr = {0, 1};
  groups->idx = {0};
  const NodeId mean = tape.group_mean(leaf, groups);
  for (int j = 0; j < 3; ++j) CHECK(tape.value(mean).v[j] == x.v[j]);
}

TEST_CASE("relu values") {
  Tape tape;
  Tensor x(1, 2);
  x.v = {-2.0, 3.0};
  const NodeId r = tape.relu(tape.leaf(x));
  CHECK(tape.value(r).v[0] == 0.0);
  CHECK(tape.value(r).v[1] == 3.0);
}

TEST_CASE("empty group is rejected") {
  Tape tape;
  const NodeId leaf = tape.leaf(Tensor(3, 2), true);
  auto groups = std::make_shared<GroupIndex>();
  groups->ptr = {0, 0, 3};
  groups->idx = {0, 1, 2};
  CHECK_THROWS_AS(tape.group_mean(leaf, groups), Error);
}

TEST_CASE("bce with logits: value, stability, gradient") {
  CHECK(bce_from_logit(0.0, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(bce_from_logit(0.0, 0.0) == doctest::Approx(std::log(2.0)));

  // agreement with the textbook form at moderate logits
  for (double z : {-3.0, -0.7, 0.2, 2.5}) {
    for (double t : {0.0, 1.0}) {
      const double p = stable_sigmoid(z);
      const double direct = -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
      CHECK(bce_from_logit(z, t) == doctest::Approx(direct).epsilon(1e-12));
    }
  }

  // no saturation at extreme logits
  CHECK(std::isfinite(bce_from_logit(800.0, 0.0)));
  CHECK(std::isfinite(bce_from_logit(-800.0, 1.0)));
  CHECK(bce_from_logit(800.0, 1.0) == doctest::Approx(0.0));

  // perfect confident prediction drives the loss toward zero
  CHECK(bce_from_logit(25.0, 1.0) < 2e-11);

  Tape tape;
  Tensor z(3, 1);
  z.v = {0.4, -1.2, 2.0};
  const NodeId leaf = tape.leaf(z, true);
  const NodeId loss = tape.bce_with_logits_mean(leaf, {1.0, 0.0, 1.0}, 2);
  const double expect = (bce_from_logit(0.4, 1.0) + bce_from_logit(-1.2, 0.0) +
                         bce_from_logit(2.0, 1.0) + 2.0 * std::log(2.0)) /
                        5.0;
  CHECK(tape.value(loss).v[0] == doctest::Approx(expect));
  tape.backward(loss);
  for (int i = 0; i < 3; ++i) {
    const double target = i == 1 ? 0.0 : 1.0;
    CHECK(tape.grad(leaf).v[i] ==
          doctest::Approx((stable_sigmoid(z.v[i]) - target) / 5.0).epsilon(1e-12));
  }
}

TEST_CASE("concat, take_rows and pooled_mix gradients match finite differences") {
  Rng rng(777);
  const int rows = 5, cols = 3;
  std::vector<double> flat(rows * cols + rows * cols);
  for (auto& v : flat) v = rng.next_double() * 2.0 - 1.0;

  auto maps = std::make_shared<std::vector<int>>(std::vector<int>{2, 0, 1, 0, 4});
  auto build = [&](const std::vector<double>& at, Tape& tape, NodeId& a_leaf, NodeId& b_leaf) {
    Tensor a(rows, cols), b(rows, cols);
    std::copy(at.begin(), at.begin() + rows * cols, a.v.begin());
    std::copy(at.begin() + rows * cols, at.end(), b.v.begin());
    a_leaf = tape.leaf(std::move(a), true);
    b_leaf = tape.leaf(std::move(b), true);
    const NodeId cat = tape.concat_cols({a_leaf, tape.take_rows(b_leaf, maps)});
    const NodeId act = tape.relu(tape.scale(cat, 0.7));
    // collapse to a scalar through a group mean over all rows
    auto groups = std::make_shared<GroupIndex>();
    groups->ptr = {0, rows};
    groups->idx = {0, 1, 2, 3, 4};
    const NodeId pooled = tape.group_mean(act, groups);  // 1 x 2cols
    Tensor w(2 * cols, 1);
    for (int i = 0; i < 2 * cols; ++i) w.at(i, 0) = 0.3 + 0.1 * i;
    return tape.bce_with_logits_mean(tape.matmul(pooled, tape.leaf(std::move(w))), {1.0}, 0);
  };

  Tape tape;
  NodeId a_leaf, b_leaf;
  const NodeId loss = build(flat, tape, a_leaf, b_leaf);
  tape.backward(loss);
  std::vector<double> analytic;
  for (NodeId leaf : {a_leaf, b_leaf}) {
    const Tensor& g = tape.grad(leaf);
    analytic.insert(analytic.end(), g.v.begin(), g.v.end());
  }
  const auto numeric = finite_diff(
      [&](const std::vector<double>& at) {
        Tape t;
        NodeId a, b;
        return t.value(build(at, t, a, b)).v[0];
      },
      flat);
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    CHECK(rel_err(analytic[i], numeric[i]) < 1e-4);
  }
}

TEST_CASE("pooled_mix gradient matches finite differences") {
  Rng rng(778);
  const int cols = 3, nodes = 6, ncols = 2, nrows = 3;
  auto colmap = std::make_shared<std::vector<int>>(std::vector<int>{0, 1, 0, 1, 0, 1});
  auto rowmap = std::make_shared<std::vector<int>>(std::vector<int>{0, 0, 1, 1, 2, 2});
  const int total = (ncols + nrows + 1 + nodes + 1) * cols;
  std::vector<double> flat(total);
  for (auto& v : flat) v = rng.next_double() * 2.0 - 1.0;

  auto build = [&](const std::vector<double>& at, Tape& tape, std::vector<NodeId>& leaves) {
    std::size_t off = 0;
    auto take = [&](int r, int c) {
      Tensor t(r, c);
      std::copy(at.begin() + off, at.begin() + off + t.size(), t.v.begin());
      off += t.size();
      return tape.leaf(std::move(t), true);
    };
    const NodeId cp = take(ncols, cols);
    const NodeId rp = take(nrows, cols);
    const NodeId gp = take(1, cols);
    const NodeId sp = take(nodes, cols);
    const NodeId bias = take(1, cols);
    leaves = {cp, rp, gp, sp, bias};
    const NodeId mixed = tape.pooled_mix(cp, rp, gp, sp, bias, colmap, rowmap);
    auto groups = std::make_shared<GroupIndex>();
    groups->ptr = {0, nodes};
    groups->idx = {0, 1, 2, 3, 4, 5};
    Tensor w(cols, 1);
    for (int i = 0; i < cols; ++i) w.at(i, 0) = 0.4 - 0.2 * i;
    return tape.bce_with_logits_mean(
        tape.matmul(tape.group_mean(mixed, groups), tape.leaf(std::move(w))), {0.0}, 1);
  };

  Tape tape;
  std::vector<NodeId> leaves;
  const NodeId loss = build(flat, tape, leaves);
  tape.backward(loss);
  std::vector<double> analytic;
  for (NodeId leaf : leaves) {
    const Tensor& g = tape.grad(leaf);
    analytic.insert(analytic.end(), g.v.begin(), g.v.end());
  }
  const auto numeric = finite_diff(
      [&](const std::vector<double>& at) {
        Tape t;
        std::vector<NodeId> ls;
        return t.value(build(at, t, ls)).v[0];
      },
      flat);
  REQUIRE(analytic.size() == numeric.size());
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    CHECK(rel_err(analytic[i], numeric[i]) < 1e-4);
  }
}

TEST_CASE("fan-out accumulates gradients additively") {
  Tape tape;
  Tensor x(1, 1);
  x.v = {0.7};
  const NodeId leaf = tape.leaf(x, true);
  const NodeId sum = tape.add(leaf, leaf);
  tape.backward(sum);
  CHECK(tape.grad(leaf).v[0] == 2.0);
}

TEST_CASE("backward demands a scalar root") {
  Tape tape;
  const NodeId leaf = tape.leaf(Tensor(2, 2), true);
  CHECK_THROWS_AS(tape.backward(leaf), Error);
}

TEST_CASE("non-finite values are reported with the op name") {
  Tape tape;
  Tensor x(1, 2);
  x.v = {1.0, std::numeric_limits<double>::infinity()};
  tape.leaf(x, false);
  const auto diag = tape.find_nonfinite();
  REQUIRE(diag.has_value());
  CHECK(diag->find("leaf") != std::string::npos);
}

TEST_CASE("full-model gradient matches central finite differences") {
  Rng rng(404);
  for (int trial = 0; trial < 4; ++trial) {
    const int k_layers = trial % 2 == 0 ? 1 : 2;
    const int dim = trial % 2 == 0 ? 4 : 6;
    const int n = static_cast<int>(rng.uniform_int(3, 5));
    const int m = static_cast<int>(rng.uniform_int(2, 4));
    LabelMatrix x = random_matrix(rng, n, m);
    x.at(0, 0) = 1;  // keep at least one node present
    LabelVector y = hlm_test::random_labels(rng, n);

    ModelParams params = init_params(k_layers, dim, rng.next_u64());
    const GraphView g = encode(x);

    auto loss_at = [&](const std::vector<double>& flat) {
      ModelParams local = params;
      unflatten_params(local, flat);
      Tape tape;
      const RecordedForward rec = record_forward(tape, local, g);
      std::vector<double> targets;
      for (int row : g.occupied_rows) targets.push_back(y[row] == 1 ? 1.0 : 0.0);
      const int pad = g.n - static_cast<int>(g.occupied_rows.size());
      return tape.value(tape.bce_with_logits_mean(rec.logits, targets, pad)).v[0];
    };

    Tape tape;
    const RecordedForward rec = record_forward(tape, params, g);
    std::vector<double> targets;
    for (int row : g.occupied_rows) targets.push_back(y[row] == 1 ? 1.0 : 0.0);
    const int pad = g.n - static_cast<int>(g.occupied_rows.size());
    tape.backward(tape.bce_with_logits_mean(rec.logits, targets, pad));
    std::vector<double> analytic;
    for (NodeId leaf : rec.param_leaves) {
      const Tensor& grad = tape.grad(leaf);
      analytic.insert(analytic.end(), grad.v.begin(), grad.v.end());
    }

    const auto numeric = finite_diff(loss_at, flatten_params(params));
    REQUIRE(numeric.size() == analytic.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      worst = std::max(worst, rel_err(analytic[i], numeric[i]));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("tape forward is deterministic") {
  Rng rng(505);
  const LabelMatrix x = random_matrix(rng, 6, 4);
  const ModelParams params = init_params(2, 8, 42);
  const GraphView g = encode(x);
  if (g.num_nodes == 0) return;

  Tape t1, t2;
  const auto r1 = record_forward(t1, params, g);
  const auto r2 = record_forward(t2, params, g);
  const Tensor& z1 = t1.value(r1.logits);
  const Tensor& z2 = t2.value(r2.logits);
  REQUIRE(z1.size() == z2.size());
  for (std::size_t i = 0; i < z1.size(); ++i) CHECK(z1.v[i] == z2.v[i]);
}
