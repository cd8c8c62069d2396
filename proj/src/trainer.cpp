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

#include "hlm/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hlm/adam.hpp"
#include "hlm/kernels.hpp"
#include "hlm/parallel.hpp"
#include "hlm/rng.hpp"

namespace hlm::train {

namespace {

constexpr std::uint64_t kRunDataTag = 0x64617461;   // per-run generator stream
constexpr std::uint64_t kRunInitTag = 0x696e6974;   // per-run parameter init
constexpr std::uint64_t kValidationTag = 0x76616c64;

int effective_threads(int configured) {
  if (configured > 0) return configured;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<double> targets_for(const GraphView& g, const LabelVector& y) {
  std::vector<double> targets(g.occupied_rows.size());
  for (std::size_t r = 0; r < g.occupied_rows.size(); ++r) {
    targets[r] = y[g.occupied_rows[r]] == 1 ? 1.0 : 0.0;
  }
  return targets;
}

struct PairWork {
  double loss = 0.0;
  std::vector<double> grads;
};

// Forward+backward for one pair on the given tape; grads come back in
// for_each_tensor order.
void pair_grad(Tape& tape, const ModelParams& params, const LabelMatrix& x, const LabelVector& y,
               PairWork& out) {
  tape.clear();
  const GraphView g = encode(x);
  const RecordedForward rec = record_forward(tape, params, g);
  const int pad = g.n - static_cast<int>(g.occupied_rows.size());
  const NodeId loss = tape.bce_with_logits_mean(rec.logits, targets_for(g, y), pad);
  out.loss = tape.value(loss).v[0];
  tape.backward(loss);
  out.grads.clear();
  out.grads.reserve(param_count(params));
  for (NodeId leaf : rec.param_leaves) {
    const Tensor& grad = tape.grad(leaf);
    out.grads.insert(out.grads.end(), grad.v.begin(), grad.v.end());
  }
}

std::string progress_line(int run, int iteration, double train_loss, double val_acc) {
  std::ostringstream os;
  os << "{\"run\":" << run << ",\"iteration\":" << iteration << ",\"train_loss\":" << train_loss
     << ",\"val_acc\":" << val_acc << "}";
  return os.str();
}

}  // namespace

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorCode::parse, "config: bad JSON in " + path + ": " + e.what());
  }

  TrainConfig cfg;  // desk-scale defaults
  const std::string preset = j.value("preset", "desk");
  if (preset == "paper") {
    cfg.gen.n_lo = 100;
    cfg.gen.n_hi = 2000;
    cfg.gen.m_lo = 2;
    cfg.gen.m_hi = 60;
    cfg.dim = 32;
    cfg.patience = 10000;
    cfg.max_iterations = 50000;
    cfg.num_runs = 10;
  } else {
    require(preset == "desk", ErrorCode::config, "config: preset must be 'desk' or 'paper'");
  }

  try {
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.k_layers = j.value("k_layers", cfg.k_layers);
    cfg.dim = j.value("dim", cfg.dim);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.patience = j.value("patience", cfg.patience);
    cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
    cfg.num_runs = j.value("num_runs", cfg.num_runs);
    cfg.validation_every = j.value("validation_every", cfg.validation_every);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("gen")) {
      const auto& g = j["gen"];
      cfg.gen.n_lo = g.value("n_lo", cfg.gen.n_lo);
      cfg.gen.n_hi = g.value("n_hi", cfg.gen.n_hi);
      cfg.gen.m_lo = g.value("m_lo", cfg.gen.m_lo);
      cfg.gen.m_hi = g.value("m_hi", cfg.gen.m_hi);
    }
    if (j.contains("validation")) {
      const auto& v = j["validation"];
      cfg.validation.num_datasets = v.value("num_datasets", cfg.validation.num_datasets);
      cfg.validation.n_lo = v.value("n_lo", cfg.validation.n_lo);
      cfg.validation.n_hi = v.value("n_hi", cfg.validation.n_hi);
      cfg.validation.m_lo = v.value("m_lo", cfg.validation.m_lo);
      cfg.validation.m_hi = v.value("m_hi", cfg.validation.m_hi);
    }
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorCode::parse, std::string("config: bad field type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void TrainConfig::validate() const {
  gen.validate();
  validation.validate();
  require(k_layers >= 1 && dim >= 1, ErrorCode::config, "need k_layers >= 1 and dim >= 1");
  require(batch_size >= 1, ErrorCode::config, "need batch_size >= 1");
  require(max_iterations >= 1, ErrorCode::config, "need max_iterations >= 1");
  require(patience >= 1 && patience <= max_iterations, ErrorCode::config,
          "need 1 <= patience <= max_iterations");
  require(num_runs >= 1, ErrorCode::config, "need num_runs >= 1");
  require(validation_every >= 1, ErrorCode::config, "need validation_every >= 1");
  require(learning_rate > 0, ErrorCode::config, "need learning_rate > 0");
}

double pair_loss(const ModelParams& p, const LabelMatrix& x, const LabelVector& y) {
  detail::check_binary_pair(x, y);
  Tape tape;
  const GraphView g = encode(x);
  const RecordedForward rec = record_forward(tape, p, g);
  const int pad = g.n - static_cast<int>(g.occupied_rows.size());
  const NodeId loss = tape.bce_with_logits_mean(rec.logits, targets_for(g, y), pad);
  const double value = tape.value(loss).v[0];
  require(std::isfinite(value), ErrorCode::contract, "loss is non-finite");
  return value;
}

double validation_accuracy(const ModelParams& p, const std::vector<gen::CondIndDataset>& suite,
                           int threads) {
  require(!suite.empty(), ErrorCode::contract, "validation suite is empty");
  std::vector<double> acc(suite.size(), 0.0);
  parallel_for(static_cast<int>(suite.size()), effective_threads(threads), [&](int d) {
    const auto& ds = suite[d];
    const ProbVector probs = forward(p, ds.x);
    const LabelVector pred = threshold_labels(probs);
    int hits = 0;
    for (int i = 0; i < ds.y.size(); ++i) hits += pred[i] == ds.y[i];
    acc[d] = static_cast<double>(hits) / ds.y.size();
  });
  double sum = 0.0;
  for (double a : acc) sum += a;
  return sum / static_cast<double>(acc.size());
}

RunOutcome train_single_run(const TrainConfig& cfg, int run_id,
                            const std::vector<gen::CondIndDataset>& validation,
                            const ProgressFn& progress) {
  cfg.validate();
  const int threads = effective_threads(cfg.threads);

  gen::GenConfig data_cfg = cfg.gen;
  data_cfg.master_seed = derive_seed(cfg.master_seed, kRunDataTag, static_cast<std::uint64_t>(run_id));
  ModelParams params = init_params(
      cfg.k_layers, cfg.dim,
      derive_seed(cfg.master_seed, kRunInitTag, static_cast<std::uint64_t>(run_id)));

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  AdamState adam(param_count(params), adam_cfg);

  RunOutcome out;
  out.report.run_id = run_id;

  std::vector<Tape> tapes(threads);
  std::vector<PairWork> work(cfg.batch_size);
  std::vector<double> flat = flatten_params(params);
  std::vector<double> grads(flat.size());

  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  double window_sum = 0.0;
  int window_count = 0;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    const auto batch = gen::gen_batch(data_cfg, cfg.batch_size,
                                      static_cast<std::uint64_t>(iter - 1));
    parallel_for(cfg.batch_size, threads, [&](int p) {
      // Strided assignment: worker (p % threads) owns tape (p % threads).
      pair_grad(tapes[p % threads], params, batch[p].x, batch[p].y, work[p]);
    });

    double batch_loss = 0.0;
    std::fill(grads.begin(), grads.end(), 0.0);
    for (int p = 0; p < cfg.batch_size; ++p) {
      batch_loss += work[p].loss;
      kernels::active().vadd(static_cast<int>(grads.size()), work[p].grads.data(), grads.data());
    }
    batch_loss /= cfg.batch_size;
    kernels::active().vscale(static_cast<int>(grads.size()), 1.0 / cfg.batch_size, grads.data());

    bool finite = std::isfinite(batch_loss);
    for (std::size_t i = 0; finite && i < grads.size(); ++i) finite = std::isfinite(grads[i]);
    if (!finite) {
      out.report.diverged = true;
      out.report.iterations_run = iter;
      // Rebuild the offending pair deterministically for a diagnostic.
      for (int p = 0; p < cfg.batch_size && out.report.note.empty(); ++p) {
        if (!std::isfinite(work[p].loss)) {
          Tape probe;
          PairWork scratch;
          try {
            pair_grad(probe, params, batch[p].x, batch[p].y, scratch);
          } catch (const Error&) {
          }
          if (auto diag = probe.find_nonfinite()) out.report.note = *diag;
        }
      }
      if (out.report.note.empty()) out.report.note = "non-finite batch loss or gradient";
      break;
    }

    adam.step(flat, grads);
    unflatten_params(params, flat);

    window_sum += batch_loss;
    ++window_count;
    if (batch_loss < best_loss) {
      best_loss = batch_loss;
      since_best = 0;
      out.report.last_best_iteration = iter;
    } else {
      ++since_best;
    }

    if (iter % cfg.validation_every == 0) {
      Checkpoint ck;
      ck.iteration = iter;
      ck.train_loss = window_sum / window_count;
      ck.val_acc = validation_accuracy(params, validation, threads);
      out.report.checkpoints.push_back(ck);
      window_sum = 0.0;
      window_count = 0;
      if (progress) progress(progress_line(run_id, iter, ck.train_loss, ck.val_acc));
    }

    out.report.iterations_run = iter;
    if (since_best >= cfg.patience) break;
  }

  if (!out.report.diverged && out.report.checkpoints.empty()) {
    Checkpoint ck;
    ck.iteration = out.report.iterations_run;
    ck.train_loss = window_count > 0 ? window_sum / window_count : 0.0;
    ck.val_acc = validation_accuracy(params, validation, threads);
    out.report.checkpoints.push_back(ck);
    if (progress) progress(progress_line(run_id, ck.iteration, ck.train_loss, ck.val_acc));
  }

  double acc_sum = 0.0;
  for (const auto& ck : out.report.checkpoints) acc_sum += ck.val_acc;
  out.report.mean_val_acc =
      out.report.checkpoints.empty() ? 0.0 : acc_sum / out.report.checkpoints.size();
  out.report.best_loss = best_loss;
  out.final_params = std::move(params);
  return out;
}

std::vector<gen::CondIndDataset> validation_suite(const TrainConfig& cfg) {
  return gen::gen_condind(cfg.validation, derive_seed(cfg.master_seed, kValidationTag));
}

TrainResult train_select(const TrainConfig& cfg, const ProgressFn& progress,
                         const RunDoneFn& run_done) {
  cfg.validate();
  const auto validation = validation_suite(cfg);

  TrainResult result;
  double best_acc = -1.0;
  for (int run = 0; run < cfg.num_runs; ++run) {
    RunOutcome outcome = train_single_run(cfg, run, validation, progress);
    if (run_done) run_done(outcome);
    result.reports.push_back(outcome.report);
    if (outcome.report.diverged) continue;
    if (outcome.report.mean_val_acc > best_acc) {
      best_acc = outcome.report.mean_val_acc;
      result.selected_run = run;
      result.selected = std::move(outcome.final_params);
    }
  }
  require(result.selected_run >= 0, ErrorCode::diverged,
          "all " + std::to_string(cfg.num_runs) + " runs diverged; see the run reports");
  return result;
}

}  // namespace hlm::train
