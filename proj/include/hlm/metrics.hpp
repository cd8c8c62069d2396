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

#include "hlm/adapters.hpp"
#include "hlm/labelcore.hpp"

namespace hlm {

/// Fraction of predictions equal to the truth.
double accuracy(const LabelVector& pred, const LabelVector& truth);

/// Harmonic mean of precision and recall with `positive` as the positive
/// class. Defined as 0 when there are no positive predictions or no
/// positive truths (never NaN).
double f1_score(const LabelVector& pred, const LabelVector& truth, int positive = 1);

/// argmax class per row (1-based); ties resolve to the lowest class id.
LabelVector argmax_labels(const SoftLabels& soft);

}  // namespace hlm
