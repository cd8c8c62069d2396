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

#include "hlm/datagen.hpp"

#include <string>

#include "hlm/rng.hpp"

namespace hlm::gen {

SyntheticPair gen_pair(const GenConfig& cfg, std::uint64_t stream_id) {
  cfg.validate();
  Rng rng = Rng::from_stream(cfg.master_seed, 0x70616972 /* pair stream domain */, stream_id);

  SyntheticPair out;
  out.master_seed = cfg.master_seed;
  out.stream_id = stream_id;

  for (int shape = 0; shape < cfg.max_shapes; ++shape) {
    const int m = static_cast<int>(rng.uniform_int(cfg.m_lo, cfg.m_hi));
    const int n = static_cast<int>(rng.uniform_int(cfg.n_lo, cfg.n_hi));
    LabelMatrix x(n, m);
    LabelVector y;
    y.labels.resize(n);
    for (int attempt = 0; attempt < cfg.max_attempts_per_shape; ++attempt) {
      for (auto& cell : x.cells) cell = static_cast<std::int8_t>(rng.uniform3());
      for (int i = 0; i < n; ++i) y.labels[i] = static_cast<std::int8_t>(rng.sign());
      ++out.attempts;
      if (is_valid(x, y)) {
        out.x = std::move(x);
        out.y = std::move(y);
        return out;
      }
    }
  }
  throw_error(ErrorCode::contract,
              "rejection sampling exhausted: no valid pair in " +
                  std::to_string(cfg.max_shapes) + " shapes x " +
                  std::to_string(cfg.max_attempts_per_shape) + " attempts");
}

std::vector<SyntheticPair> gen_batch(const GenConfig& cfg, int batch_size,
                                     std::uint64_t iteration_index) {
  require(batch_size >= 1, ErrorCode::contract, "batch_size must be >= 1");
  std::vector<SyntheticPair> batch;
  batch.reserve(batch_size);
  for (int p = 0; p < batch_size; ++p) {
    // Disjoint streams per (iteration, position) so changing one pair can
    // never perturb another.
    const std::uint64_t stream = derive_seed(iteration_index, 0x62617463 /* batch domain */,
                                             static_cast<std::uint64_t>(p));
    batch.push_back(gen_pair(cfg, stream));
  }
  return batch;
}

std::vector<CondIndDataset> gen_condind(const CondIndConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<CondIndDataset> out;
  out.reserve(cfg.num_datasets);
  for (int d = 0; d < cfg.num_datasets; ++d) {
    Rng rng = Rng::from_stream(seed, 0x636f6e64 /* condind domain */,
                               static_cast<std::uint64_t>(d));
    CondIndDataset ds;
    const int n = static_cast<int>(rng.uniform_int(cfg.n_lo, cfg.n_hi));
    const int m = static_cast<int>(rng.uniform_int(cfg.m_lo, cfg.m_hi));
    ds.positive_prior = cfg.prior_lo + rng.next_double() * (cfg.prior_hi - cfg.prior_lo);
    ds.accuracy.resize(m);
    ds.propensity.resize(m);
    for (int j = 0; j < m; ++j) {
      ds.accuracy[j] = cfg.accuracy_lo + rng.next_double() * (cfg.accuracy_hi - cfg.accuracy_lo);
      ds.propensity[j] =
          cfg.propensity_lo + rng.next_double() * (cfg.propensity_hi - cfg.propensity_lo);
    }
    ds.x = LabelMatrix(n, m);
    ds.y.labels.resize(n);
    for (int i = 0; i < n; ++i) {
      const int truth = rng.bernoulli(ds.positive_prior) ? 1 : -1;
      ds.y.labels[i] = static_cast<std::int8_t>(truth);
      for (int j = 0; j < m; ++j) {
        if (!rng.bernoulli(ds.propensity[j])) continue;  // abstain
        const bool right = rng.bernoulli(ds.accuracy[j]);
        ds.x.at(i, j) = static_cast<std::int8_t>(right ? truth : -truth);
      }
    }
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace hlm::gen
