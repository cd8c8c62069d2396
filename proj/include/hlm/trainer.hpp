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
#include <functional>
#include <string>
#include <vector>

#include "hlm/datagen.hpp"
#include "hlm/model.hpp"

namespace hlm::train {

struct TrainConfig {
  gen::GenConfig gen;              // master_seed is derived per run from master_seed below
  gen::CondIndConfig validation;   // run-selection suite, shared across runs
  int k_layers = 4;
  int dim = 16;
  int batch_size = 50;
  double learning_rate = 1e-3;
  int patience = 1000;             // iterations without a new best batch loss
  int max_iterations = 20000;
  int num_runs = 3;
  int validation_every = 250;
  std::uint64_t master_seed = 0;
  int threads = 0;                 // 0 = hardware concurrency

  void validate() const;
};

/// JSON config file. The optional "preset" key ("desk" or "paper") sets the
/// baseline; explicit keys override it. Desk is the TrainConfig default;
/// paper raises the shapes to n in [100,2000] and m in [2,60], width 32,
/// patience 10^4, 5x10^4 iterations and 10 runs.
TrainConfig load_config(const std::string& path);

struct Checkpoint {
  int iteration;        // 1-based, recorded when iteration % validation_every == 0
  double train_loss;    // mean batch loss since the previous checkpoint
  double val_acc;
};

struct RunReport {
  int run_id = 0;
  std::vector<Checkpoint> checkpoints;
  double mean_val_acc = 0.0;  // arithmetic mean over recorded checkpoints
  int iterations_run = 0;
  int last_best_iteration = 0;  // iteration of the last batch-loss improvement
  double best_loss = 0.0;
  bool diverged = false;
  std::string note;
};

struct RunOutcome {
  RunReport report;
  ModelParams final_params;
};

struct TrainResult {
  int selected_run = -1;
  ModelParams selected;
  std::vector<RunReport> reports;
};

/// Line-delimited progress records (one JSON object per line).
using ProgressFn = std::function<void(const std::string&)>;
/// Invoked after each run completes (checkpointing hook).
using RunDoneFn = std::function<void(const RunOutcome&)>;

/// Mean binary cross-entropy of the model on one pair, over all n points
/// (all-abstain rows contribute the uninformative ln 2).
double pair_loss(const ModelParams& p, const LabelMatrix& x, const LabelVector& y);

/// The run-selection suite a config implies; shared by every run of
/// train_select and reproducible from the config alone.
std::vector<gen::CondIndDataset> validation_suite(const TrainConfig& cfg);

/// Mean over datasets of thresholded-at-0.5 accuracy against ground truth.
double validation_accuracy(const ModelParams& p, const std::vector<gen::CondIndDataset>& suite,
                           int threads = 1);

/// One pre-training run: fresh on-the-fly batch each iteration, one Adam
/// step per batch, stopping on patience exhaustion or max_iterations.
/// Deterministic given (config, run_id).
RunOutcome train_single_run(const TrainConfig& cfg, int run_id,
                            const std::vector<gen::CondIndDataset>& validation,
                            const ProgressFn& progress = nullptr);

/// Runs num_runs independent runs and returns the final-iteration params of
/// the run with the highest mean validation accuracy (ties break toward the
/// lower run id). Diverged runs are reported but never selected; if every
/// run diverges this throws after delivering all reports via run_done.
TrainResult train_select(const TrainConfig& cfg, const ProgressFn& progress = nullptr,
                         const RunDoneFn& run_done = nullptr);

}  // namespace hlm::train
