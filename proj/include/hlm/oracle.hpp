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
#include <vector>

#include "hlm/labelcore.hpp"

namespace hlm::oracle {

struct OracleResult {
  enum class Method { exact, monte_carlo };

  std::vector<double> estimate;    // per point, in [-1, 1]
  std::uint64_t valid_count = 0;   // exact: |valid set|; MC: accepted samples
  Method method = Method::exact;
  std::uint64_t samples_drawn = 0; // MC only

  const char* method_name() const {
    return method == Method::exact ? "exact" : "monte_carlo";
  }
};

/// Component-wise mean of every valid label vector, by enumerating all 2^n
/// candidates. Candidates are visited in Gray-code order so a single label
/// flip updates the per-LF tallies in O(row nonzeros) instead of O(nm).
/// Refuses n > enumeration_cap; an empty valid set is a distinct error.
OracleResult exact_estimate(const LabelMatrix& x, int enumeration_cap = 20);

/// Same mean estimated from `num_accepted` label vectors drawn uniformly
/// and kept when valid. Deterministic given the seed. Gives up with a
/// "valid set too sparse" error after `max_draws` rejections.
OracleResult mc_estimate(const LabelMatrix& x, std::uint64_t num_accepted, std::uint64_t seed,
                         std::uint64_t max_draws = 10'000'000);

/// Fraction of uniformly generated pairs that are valid: X entries uniform
/// over {-1,0,+1}, y uniform over {-1,+1}^n, m drawn uniformly from
/// [m_lo, m_hi] per trial.
double valid_pair_probability(int n, int m_lo, int m_hi, std::uint64_t trials,
                              std::uint64_t seed);

struct CeMinimizerCheck {
  std::vector<double> empirical_mean;  // closed-form minimizer of the summed
                                       // cross-entropy over the sample: the
                                       // per-component sample mean
  std::vector<double> exact;           // exact_estimate for comparison
};

/// Draws `num_samples` valid label vectors uniformly and returns the
/// cross-entropy minimizer over that sample next to the exact mean, so
/// callers can assert convergence.
CeMinimizerCheck ce_minimizer_check(const LabelMatrix& x, std::uint64_t num_samples,
                                    std::uint64_t seed, int enumeration_cap = 20,
                                    std::uint64_t max_draws = 10'000'000);

}  // namespace hlm::oracle
