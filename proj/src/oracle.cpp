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

#include "hlm/oracle.hpp"

#include <bit>
#include <string>

#include "hlm/rng.hpp"

namespace hlm::oracle {

namespace {

// Per-LF tallies for one class: how many rows of that class each LF labels
// correctly / incorrectly. g(j, c) == 1 iff correct > incorrect, strictly.
struct ClassTally {
  std::vector<int> correct, incorrect;
  std::vector<std::uint8_t> better;  // cached g values
  int better_sum = 0;

  explicit ClassTally(int m) : correct(m, 0), incorrect(m, 0), better(m, 0) {}

  void refresh(int j) {
    const std::uint8_t now = correct[j] > incorrect[j] ? 1 : 0;
    better_sum += now - better[j];
    better[j] = now;
  }
};

struct ValidityState {
  ClassTally pos, neg;  // class +1 and class -1
  int m;

  explicit ValidityState(int m_) : pos(m_), neg(m_), m(m_) {}

  bool valid() const { return 2 * pos.better_sum > m && 2 * neg.better_sum > m; }

  ClassTally& tally(int label_class) { return label_class == 1 ? pos : neg; }

  // Adds (sign = +1) or removes (sign = -1) row i's contribution, given the
  // row's current ground-truth label.
  void apply_row(const LabelMatrix& x, int i, int truth, int sign) {
    ClassTally& t = tally(truth);
    const std::int8_t* row = x.row(i);
    for (int j = 0; j < m; ++j) {
      const int v = row[j];
      if (v == 0) continue;
      if (v == truth) {
        t.correct[j] += sign;
      } else {
        t.incorrect[j] += sign;
      }
      t.refresh(j);
    }
  }
};

OracleResult finalize(const std::vector<std::int64_t>& acc, std::uint64_t count,
                      OracleResult::Method method, std::uint64_t drawn) {
  OracleResult out;
  out.method = method;
  out.valid_count = count;
  out.samples_drawn = drawn;
  out.estimate.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out.estimate[i] = static_cast<double>(acc[i]) / static_cast<double>(count);
  }
  return out;
}

}  // namespace

OracleResult exact_estimate(const LabelMatrix& x, int enumeration_cap) {
  require(x.binary(), ErrorCode::contract, "exact estimate requires a binary-mode label matrix");
  x.validate();
  const int n = x.rows;
  require(n <= enumeration_cap, ErrorCode::contract,
          "exact enumeration refused: n = " + std::to_string(n) + " exceeds cap " +
              std::to_string(enumeration_cap));

  // Bit 0 in the Gray code = label -1, bit 1 = label +1. Start at all -1.
  std::vector<int> y(n, -1);
  ValidityState state(x.cols);
  for (int i = 0; i < n; ++i) state.apply_row(x, i, -1, +1);

  std::vector<std::int64_t> acc(n, 0);
  std::uint64_t count = 0;
  auto record = [&] {
    if (!state.valid()) return;
    ++count;
    for (int i = 0; i < n; ++i) acc[i] += y[i];
  };

  record();
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t t = 1; t < total; ++t) {
    const int i = std::countr_zero(t);  // Gray code neighbor: flip this row
    state.apply_row(x, i, y[i], -1);
    y[i] = -y[i];
    state.apply_row(x, i, y[i], +1);
    record();
  }

  require(count > 0, ErrorCode::no_valid_labeling,
          "no valid labeling exists for this label matrix");
  return finalize(acc, count, OracleResult::Method::exact, 0);
}

namespace {

// Validity of one candidate y against x, with scratch tallies reused across
// draws.
bool check_candidate(const LabelMatrix& x, const std::vector<int>& y, ValidityState& state) {
  const int m = x.cols;
  std::fill(state.pos.correct.begin(), state.pos.correct.end(), 0);
  std::fill(state.pos.incorrect.begin(), state.pos.incorrect.end(), 0);
  std::fill(state.neg.correct.begin(), state.neg.correct.end(), 0);
  std::fill(state.neg.incorrect.begin(), state.neg.incorrect.end(), 0);
  for (int i = 0; i < x.rows; ++i) {
    const std::int8_t* row = x.row(i);
    ClassTally& t = state.tally(y[i]);
    const int truth = y[i];
    for (int j = 0; j < m; ++j) {
      const int v = row[j];
      if (v == 0) continue;
      if (v == truth) {
        ++t.correct[j];
      } else {
        ++t.incorrect[j];
      }
    }
  }
  int better_pos = 0, better_neg = 0;
  for (int j = 0; j < m; ++j) {
    better_pos += state.pos.correct[j] > state.pos.incorrect[j];
    better_neg += state.neg.correct[j] > state.neg.incorrect[j];
  }
  return 2 * better_pos > m && 2 * better_neg > m;
}

}  // namespace

OracleResult mc_estimate(const LabelMatrix& x, std::uint64_t num_accepted, std::uint64_t seed,
                         std::uint64_t max_draws) {
  require(x.binary(), ErrorCode::contract, "MC estimate requires a binary-mode label matrix");
  x.validate();
  require(num_accepted >= 1, ErrorCode::contract, "num_accepted must be >= 1");
  const int n = x.rows;

  Rng rng(seed);
  std::vector<int> y(n);
  ValidityState state(x.cols);
  std::vector<std::int64_t> acc(n, 0);
  std::uint64_t accepted = 0;
  std::uint64_t drawn = 0;
  while (accepted < num_accepted) {
    require(drawn < max_draws, ErrorCode::sparse_valid_set,
            "valid set too sparse: gave up after " + std::to_string(drawn) + " draws with " +
                std::to_string(accepted) + " accepted");
    for (int i = 0; i < n; ++i) y[i] = rng.sign();
    ++drawn;
    if (!check_candidate(x, y, state)) continue;
    ++accepted;
    for (int i = 0; i < n; ++i) acc[i] += y[i];
  }
  return finalize(acc, accepted, OracleResult::Method::monte_carlo, drawn);
}

double valid_pair_probability(int n, int m_lo, int m_hi, std::uint64_t trials,
                              std::uint64_t seed) {
  require(n >= 1, ErrorCode::contract, "n must be >= 1");
  require(1 <= m_lo && m_lo <= m_hi, ErrorCode::contract, "need 1 <= m_lo <= m_hi");
  require(trials >= 1, ErrorCode::contract, "trials must be >= 1");

  Rng rng(seed);
  std::vector<int> y(n);
  std::uint64_t valid = 0;
  LabelMatrix x(n, m_hi);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const int m = static_cast<int>(rng.uniform_int(m_lo, m_hi));
    x.cols = m;
    x.cells.resize(static_cast<std::size_t>(n) * m);
    for (auto& cell : x.cells) cell = static_cast<std::int8_t>(rng.uniform3());
    for (int i = 0; i < n; ++i) y[i] = rng.sign();
    ValidityState state(m);
    if (check_candidate(x, y, state)) ++valid;
  }
  return static_cast<double>(valid) / static_cast<double>(trials);
}

CeMinimizerCheck ce_minimizer_check(const LabelMatrix& x, std::uint64_t num_samples,
                                    std::uint64_t seed, int enumeration_cap,
                                    std::uint64_t max_draws) {
  // The summed binary cross-entropy over a sample of label vectors is
  // minimized component-wise by the sample mean (after the [-1,1] <-> [0,1]
  // change of variables), so the empirical minimizer IS the MC mean.
  CeMinimizerCheck out;
  out.exact = exact_estimate(x, enumeration_cap).estimate;
  out.empirical_mean = mc_estimate(x, num_samples, seed, max_draws).estimate;
  return out;
}

}  // namespace hlm::oracle
