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

#include "hlm/adapters.hpp"
#include "hlm/tape.hpp"
#include "support/builders.hpp"

using namespace hlm;
using namespace hlm_test;

namespace {

double restricted_ce(const ModelParams& params, const LabelMatrix& x,
                     const LabeledSubset& subset) {
  const ProbVector probs = forward(params, x);
  double total = 0.0;
  for (int k = 0; k < subset.size(); ++k) {
    const double t = subset.labels[k] == 1 ? 1.0 : 0.0;
    const double p = probs[subset.indices[k]];
    total += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
  }
  return total / subset.size();
}

LabeledSubset make_subset(const LabelVector& y, const std::vector<int>& indices) {
  LabeledSubset s;
  for (int i : indices) {
    s.indices.push_back(i);
    s.labels.push_back(y[i]);
  }
  return s;
}

}  // namespace

TEST_CASE("default epoch schedule is round(sqrt(N)) with a floor of 1") {
  CHECK(default_finetune_epochs(1) == 1);
  CHECK(default_finetune_epochs(2) == 1);
  CHECK(default_finetune_epochs(100) == 10);
  CHECK(default_finetune_epochs(300) == 17);
}

TEST_CASE("finetune with zero epochs returns the input parameters") {
  Rng rng(41);
  auto x = random_matrix(rng, 12, 5);
  x.at(0, 0) = 1;
  const auto y = random_labels(rng, 12);
  const auto params = init_params(2, 8, 17);
  const auto subset = make_subset(y, {0, 3, 5});
  const auto tuned = finetune(params, x, subset, 1e-4, 0);
  CHECK(flatten_params(tuned) == flatten_params(params));
}

TEST_CASE("finetune is deterministic and leaves the input untouched") {
  Rng rng(42);
  auto x = random_matrix(rng, 15, 5);
  x.at(0, 0) = 1;
  const auto y = random_labels(rng, 15);
  const auto params = init_params(2, 8, 18);
  const auto before = flatten_params(params);
  const auto subset = make_subset(y, {1, 2, 7, 9});

  const auto a = finetune(params, x, subset, 1e-4, 5);
  const auto b = finetune(params, x, subset, 1e-4, 5);
  CHECK(flatten_params(a) == flatten_params(b));
  CHECK(flatten_params(params) == before);
  CHECK(flatten_params(a) != before);
}

TEST_CASE("one small step does not increase the restricted cross-entropy") {
  Rng rng(43);
  for (int it = 0; it < 5; ++it) {
    auto x = random_matrix(rng, 20, 6);
    x.at(0, 0) = 1;
    const auto y = random_labels(rng, 20);
    const auto params = init_params(2, 8, 200 + it);
    const auto subset = make_subset(y, {0, 2, 4, 6, 8, 10});
    const double before = restricted_ce(params, x, subset);
    const auto tuned = finetune(params, x, subset, 1e-5, 1);
    const double after = restricted_ce(tuned, x, subset);
    CHECK(after <= before + 1e-9);
  }
}

TEST_CASE("finetune validates its inputs") {
  Rng rng(44);
  auto x = random_matrix(rng, 10, 4);
  x.at(0, 0) = 1;
  const auto params = init_params(1, 4, 3);

  LabeledSubset empty;
  CHECK_THROWS_AS(finetune(params, x, empty), Error);

  LabeledSubset out_of_range;
  out_of_range.indices = {10};
  out_of_range.labels = {1};
  CHECK_THROWS_AS(finetune(params, x, out_of_range), Error);

  LabeledSubset dup;
  dup.indices = {1, 1};
  dup.labels = {1, -1};
  CHECK_THROWS_AS(finetune(params, x, dup), Error);
}

TEST_CASE("multiclass soft labels are row-normalized distributions") {
  Rng rng(45);
  const auto params = init_params(2, 8, 19);
  for (int classes : {3, 4, 6}) {
    LabelMatrix x(14, 5, classes);
    for (auto& cell : x.cells) cell = static_cast<std::int8_t>(rng.uniform_int(0, classes));
    x.at(0, 0) = 1;
    const auto soft = multiclass_infer(params, x);
    REQUIRE(soft.rows == 14);
    REQUIRE(soft.num_classes == classes);
    for (int i = 0; i < soft.rows; ++i) {
      double sum = 0.0;
      for (int c = 0; c < classes; ++c) {
        CHECK(soft.at(i, c) > 0.0);
        sum += soft.at(i, c);
      }
      CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("two-class decomposition matches the binary recodings") {
  Rng rng(46);
  const auto params = init_params(2, 8, 20);
  LabelMatrix x(12, 4, 2);
  for (auto& cell : x.cells) cell = static_cast<std::int8_t>(rng.uniform_int(0, 2));
  x.at(0, 0) = 1;

  // recode class 1 by hand and check that X_2 is its negation
  LabelMatrix x1(12, 4);
  for (std::size_t i = 0; i < x.cells.size(); ++i) {
    x1.cells[i] = static_cast<std::int8_t>(x.cells[i] == 0 ? 0 : (x.cells[i] == 1 ? 1 : -1));
  }
  const auto p1 = forward(params, x1);
  const auto p2 = forward(params, negated(x1));

  const auto soft = multiclass_infer(params, x);
  for (int i = 0; i < 12; ++i) {
    const double expect = p1[i] / (p1[i] + p2[i]);
    CHECK(std::fabs(soft.at(i, 0) - expect) < 1e-8);
  }
}

TEST_CASE("permuting class ids permutes the output columns") {
  Rng rng(47);
  const auto params = init_params(2, 8, 21);
  const int classes = 4;
  LabelMatrix x(10, 5, classes);
  for (auto& cell : x.cells) cell = static_cast<std::int8_t>(rng.uniform_int(0, classes));
  x.at(0, 0) = 1;
  const auto base = multiclass_infer(params, x);

  // class relabeling c -> perm[c-1]+1
  const auto perm = random_permutation(rng, classes);
  LabelMatrix relabeled = x;
  for (auto& cell : relabeled.cells) {
    if (cell != 0) cell = static_cast<std::int8_t>(perm[cell - 1] + 1);
  }
  const auto shuffled = multiclass_infer(params, relabeled);
  for (int i = 0; i < 10; ++i) {
    for (int c = 0; c < classes; ++c) {
      CHECK(std::fabs(shuffled.at(i, perm[c]) - base.at(i, c)) < 1e-12);
    }
  }
}

TEST_CASE("multiclass rejects binary matrices and tiny C") {
  const auto params = init_params(1, 4, 22);
  LabelMatrix binary(3, 3);
  binary.at(0, 0) = 1;
  CHECK_THROWS_AS(multiclass_infer(params, binary), Error);
}
