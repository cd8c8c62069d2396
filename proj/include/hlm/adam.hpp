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

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hlm {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with the max-second-moment (amsgrad) correction, bias-corrected as
/// in the common framework implementations.
class AdamState {
 public:
  explicit AdamState(std::size_t n, AdamConfig cfg = {});

  /// One update over a flat parameter vector; `params` and `grads` must
  /// hold exactly the size given at construction.
  void step(std::vector<double>& params, const std::vector<double>& grads);

  std::int64_t steps_taken() const { return step_; }
  const std::vector<double>& max_second_moment() const { return vmax_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<double> m_, v_, vmax_;
};

}  // namespace hlm
