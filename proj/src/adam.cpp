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

#include "hlm/adam.hpp"

#include <cmath>

#include "hlm/errors.hpp"
#include "hlm/kernels.hpp"

namespace hlm {

AdamState::AdamState(std::size_t n, AdamConfig cfg)
    : cfg_(cfg), m_(n, 0.0), v_(n, 0.0), vmax_(n, 0.0) {}

void AdamState::step(std::vector<double>& params, const std::vector<double>& grads) {
  require(params.size() == m_.size() && grads.size() == m_.size(), ErrorCode::contract,
          "adam: parameter/gradient size mismatch");
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  const double step_size = cfg_.learning_rate / bc1;
  const double inv_sqrt_bc2 = 1.0 / std::sqrt(bc2);
  kernels::active().adam_update(static_cast<int>(params.size()), params.data(), grads.data(),
                                m_.data(), v_.data(), vmax_.data(), cfg_.beta1, cfg_.beta2,
                                step_size, inv_sqrt_bc2, cfg_.eps);
}

}  // namespace hlm
