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

namespace hlm::gen {

/// Shape-and-rejection generator configuration. Shapes are drawn uniformly
/// (inclusive) from the ranges; matrix entries are uniform over {-1,0,+1}
/// and labels uniform over {-1,+1}; a pair is kept only when valid.
/// Desk-scale defaults; the n range reaches down far enough that the tiny
/// instances the trained model is graded on are inside the training shapes.
struct GenConfig {
  int m_lo = 3, m_hi = 15;      // labeling functions
  int n_lo = 6, n_hi = 200;     // data points
  std::uint64_t master_seed = 0;

  // Rejection caps: attempts at one shape before redrawing the shape, and
  // shapes tried before giving up with an error.
  int max_attempts_per_shape = 10'000;
  int max_shapes = 100;

  void validate() const {
    require(2 <= m_lo && m_lo <= m_hi, ErrorCode::config, "need 2 <= m_lo <= m_hi");
    require(1 <= n_lo && n_lo <= n_hi, ErrorCode::config, "need 1 <= n_lo <= n_hi");
  }
};

struct SyntheticPair {
  LabelMatrix x;
  LabelVector y;
  std::uint64_t master_seed = 0;  // RNG provenance
  std::uint64_t stream_id = 0;
  int attempts = 0;               // rejection trials consumed (all shapes)
};

/// One accepted pair from the stream `(cfg.master_seed, stream_id)`.
/// Deterministic; distinct stream ids give independent draws.
SyntheticPair gen_pair(const GenConfig& cfg, std::uint64_t stream_id);

/// `batch_size` pairs on disjoint streams derived from the iteration index,
/// so on-the-fly training batches never overlap across iterations.
std::vector<SyntheticPair> gen_batch(const GenConfig& cfg, int batch_size,
                                     std::uint64_t iteration_index);

/// Conditionally-independent generator used for the validation suite: per
/// dataset a class prior, and per LF an accuracy and a propensity; each LF
/// fires independently given the true label. No validity filtering.
struct CondIndConfig {
  int num_datasets = 100;
  int n_lo = 100, n_hi = 100;
  int m_lo = 3, m_hi = 15;
  double prior_lo = 0.3, prior_hi = 0.7;
  double accuracy_lo = 0.55, accuracy_hi = 0.95;
  double propensity_lo = 0.1, propensity_hi = 0.9;

  void validate() const {
    require(num_datasets >= 1, ErrorCode::config, "need num_datasets >= 1");
    require(1 <= n_lo && n_lo <= n_hi, ErrorCode::config, "need 1 <= n_lo <= n_hi");
    require(1 <= m_lo && m_lo <= m_hi, ErrorCode::config, "need 1 <= m_lo <= m_hi");
  }
};

struct CondIndDataset {
  LabelMatrix x;
  LabelVector y;
  double positive_prior = 0.5;
  std::vector<double> accuracy;    // per LF, P(correct | fired)
  std::vector<double> propensity;  // per LF, P(fire)
};

std::vector<CondIndDataset> gen_condind(const CondIndConfig& cfg, std::uint64_t seed);

}  // namespace hlm::gen
