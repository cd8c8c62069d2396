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
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hlm/model.hpp"
#include "support/builders.hpp"

using namespace hlm;
using namespace hlm_test;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("graph encoding drops abstentions") {
  const auto full = encode(matrix({{1, -1}, {-1, 1}}));
  CHECK(full.num_nodes == 4);
  CHECK(full.occupied_rows.size() == 2);
  CHECK(full.occupied_cols.size() == 2);

  const auto sparse = encode(matrix({{1, 0}, {0, -1}}));
  CHECK(sparse.num_nodes == 2);
  CHECK(sparse.node_row[0] == 0);
  CHECK(sparse.node_col[0] == 0);
  CHECK(sparse.node_row[1] == 1);
  CHECK(sparse.node_col[1] == 1);
  // row 0 group holds exactly node 0; column 1 group holds exactly node 1
  CHECK(sparse.row_groups->group_size(0) == 1);
  CHECK(sparse.row_groups->idx[sparse.row_groups->ptr[0]] == 0);
  CHECK(sparse.col_groups->group_size(1) == 1);
  CHECK(sparse.col_groups->idx[sparse.col_groups->ptr[1]] == 1);

  const auto empty_row = encode(matrix({{1, 1}, {0, 0}}));
  CHECK(empty_row.occupied_rows.size() == 1);
  CHECK(empty_row.occupied_rows[0] == 0);
}

TEST_CASE("initialization is seeded, bounded, and seed-sensitive") {
  const auto a = init_params(3, 8, 123);
  const auto b = init_params(3, 8, 123);
  const auto c = init_params(3, 8, 124);
  CHECK(flatten_params(a) == flatten_params(b));
  CHECK(flatten_params(a) != flatten_params(c));

  for (double v : a.value_emb.v) CHECK(std::fabs(v) <= 1.0);
  const double msg_bound = 1.8 / std::sqrt(8.0);
  const double unit_bound = 1.0 / std::sqrt(8.0);
  for (const auto& layer : a.layers) {
    for (double v : layer.w_col.v) CHECK(std::fabs(v) <= msg_bound);
    for (double v : layer.mix_col.v) CHECK(std::fabs(v) <= msg_bound);
    for (double v : layer.bias.v) CHECK(std::fabs(v) <= unit_bound);
  }
  for (double v : a.head.w1.v) CHECK(std::fabs(v) <= std::sqrt(6.0 / 8.0));
  for (double v : a.head.w3.v) CHECK(std::fabs(v) <= unit_bound);
  CHECK_THROWS_AS(init_params(0, 8, 1), Error);
}

TEST_CASE("forward: fallback rows, open interval, empty matrix") {
  const auto params = init_params(2, 8, 7);
  const auto x = matrix({{1, -1, 1}, {0, 0, 0}, {-1, 1, 0}});
  const auto probs = forward(params, x);
  REQUIRE(probs.size() == 3);
  CHECK(probs[1] == 0.5);
  for (int i : {0, 2}) {
    CHECK(probs[i] > 0.0);
    CHECK(probs[i] < 1.0);
  }

  LabelMatrix zeros(2, 2);
  try {
    forward(params, zeros);
    FAIL("expected empty-matrix error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("empty label matrix") != std::string::npos);
  }
}

TEST_CASE("forward depends only on the non-zero entries") {
  Rng rng(31);
  const auto params = init_params(2, 8, 8);
  for (int it = 0; it < 10; ++it) {
    auto x = random_matrix(rng, 7, 4);
    x.at(0, 0) = 1;
    const auto base = forward(params, x);

    // appending an all-abstain column changes nothing, bit for bit
    LabelMatrix wider(7, 5);
    for (int i = 0; i < 7; ++i) {
      for (int j = 0; j < 4; ++j) wider.at(i, j) = x.at(i, j);
    }
    const auto widened = forward(params, wider);
    for (int i = 0; i < 7; ++i) CHECK(widened[i] == base[i]);
  }
}

TEST_CASE("forward is invariant to LF order and equivariant to row order") {
  Rng rng(32);
  const auto params = init_params(3, 8, 9);
  for (int it = 0; it < 20; ++it) {
    const int n = static_cast<int>(rng.uniform_int(2, 25));
    const int m = static_cast<int>(rng.uniform_int(2, 8));
    auto x = random_matrix(rng, n, m);
    x.at(0, 0) = 1;
    const auto base = forward(params, x);

    const auto cp = random_permutation(rng, m);
    const auto col = forward(params, permute_cols(x, cp));
    for (int i = 0; i < n; ++i) CHECK(std::fabs(col[i] - base[i]) < 1e-8);

    const auto rp = random_permutation(rng, n);
    const auto row = forward(params, permute_rows(x, rp));
    for (int i = 0; i < n; ++i) CHECK(std::fabs(row[i] - base[rp[i]]) < 1e-8);
  }
}

TEST_CASE("evaluation path and tape path produce identical probabilities") {
  Rng rng(33);
  for (int it = 0; it < 20; ++it) {
    const int n = static_cast<int>(rng.uniform_int(2, 20));
    const int m = static_cast<int>(rng.uniform_int(2, 7));
    auto x = random_matrix(rng, n, m);
    x.at(0, 0) = 1;
    const auto params = init_params(it % 3 + 1, 8, 100 + it);
    const GraphView g = encode(x);

    const auto eval_probs = forward(params, g);
    Tape tape;
    const auto rec = record_forward(tape, params, g);
    const Tensor& logits = tape.value(rec.logits);
    REQUIRE(static_cast<std::size_t>(logits.rows) == g.occupied_rows.size());
    for (std::size_t r = 0; r < g.occupied_rows.size(); ++r) {
      CHECK(eval_probs[g.occupied_rows[r]] == stable_sigmoid(logits.v[r]));
    }
  }
}

TEST_CASE("model file round-trips exactly and rejects bad files") {
  const auto params = init_params(2, 6, 77);
  const auto path = temp_path("hlm_model_roundtrip.json");
  save_params(path, params);
  const auto loaded = load_params(path);
  CHECK(loaded.k_layers == params.k_layers);
  CHECK(loaded.dim == params.dim);
  CHECK(flatten_params(loaded) == flatten_params(params));

  // corrupt file
  const auto bad_path = temp_path("hlm_model_corrupt.json");
  {
    std::ofstream out(bad_path);
    out << "{ this is not json";
  }
  try {
    load_params(bad_path);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse);
    CHECK(std::string(e.what()).find("corrupt") != std::string::npos);
  }

  // version mismatch
  {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto pos = text.find("\"format_version\":1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 18, "\"format_version\":9");
    std::ofstream out(bad_path);
    out << text;
  }
  try {
    load_params(bad_path);
    FAIL("expected version error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  // shape mismatch
  {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto pos = text.find("\"dim\":6");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 7, "\"dim\":7");
    std::ofstream out(bad_path);
    out << text;
  }
  try {
    load_params(bad_path);
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("shape") != std::string::npos);
  }

  CHECK_THROWS_AS(load_params(temp_path("hlm_model_missing.json")), Error);
  std::remove(path.c_str());
  std::remove(bad_path.c_str());
}
