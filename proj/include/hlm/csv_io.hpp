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

#include <string>
#include <utility>
#include <vector>

#include "hlm/labelcore.hpp"

namespace hlm {

// CSV conventions: comma-separated integer labels, one data point per line,
// lines starting with '#' are skipped, LF or CRLF line endings accepted.
// Parse errors name the offending row and column.

LabelMatrix load_label_matrix(const std::string& path, int num_classes = 0);
void save_label_matrix(const std::string& path, const LabelMatrix& x);

LabelVector load_label_vector(const std::string& path, int num_classes = 0);
void save_label_vector(const std::string& path, const LabelVector& y);

/// One column of probabilities (binary predictions).
std::vector<double> load_prob_column(const std::string& path);
void save_prob_column(const std::string& path, const std::vector<double>& probs);

/// n x C matrix of class probabilities, row-major.
void save_prob_matrix(const std::string& path, int rows, int cols, const std::vector<double>& p);
std::vector<std::vector<double>> load_prob_rows(const std::string& path);

/// Lines of `index,label`.
std::vector<std::pair<int, int>> load_index_label_pairs(const std::string& path);

}  // namespace hlm
