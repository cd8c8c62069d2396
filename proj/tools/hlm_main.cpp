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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hlm/adapters.hpp"
#include "hlm/csv_io.hpp"
#include "hlm/datagen.hpp"
#include "hlm/metrics.hpp"
#include "hlm/oracle.hpp"
#include "hlm/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kExitCodeHelp =
    "File formats:\n"
    "  label matrix CSV   one data point per line, comma-separated integers;\n"
    "                     binary entries -1/0/1, multi-class entries 0..C; 0 always\n"
    "                     means abstain; lines starting with '#' are skipped;\n"
    "                     LF or CRLF endings; UTF-8\n"
    "  label vector CSV   one integer per line: -1/1 (binary) or 1..C (multi-class)\n"
    "  predictions CSV    one probability per line (binary) or C comma-separated\n"
    "                     class probabilities per line (multi-class), 12 significant\n"
    "                     digits\n"
    "  labeled subset CSV lines of `index,label` (0-based index)\n"
    "  model file         JSON {format_version,k_layers,dim,value_embedding,\n"
    "                     layers[],head}; doubles round-trip exactly\n"
    "Exit codes: 0 ok, 2 usage/config, 3 I/O, 4 parse, 5 contract violation,\n"
    "6 no valid labeling, 7 valid set too sparse, 8 training diverged.";

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  hlm::require(out.good(), hlm::ErrorCode::io, "cannot write file: " + path);
  out << text;
  hlm::require(out.good(), hlm::ErrorCode::io, "write failed: " + path);
}

json report_to_json(const hlm::train::RunReport& report) {
  json j;
  j["run_id"] = report.run_id;
  j["iterations_run"] = report.iterations_run;
  j["last_best_iteration"] = report.last_best_iteration;
  j["diverged"] = report.diverged;
  if (!report.note.empty()) j["note"] = report.note;
  j["best_loss"] = report.best_loss;
  j["mean_val_acc"] = report.mean_val_acc;
  json cks = json::array();
  for (const auto& ck : report.checkpoints) {
    cks.push_back({{"iteration", ck.iteration},
                   {"train_loss", ck.train_loss},
                   {"val_acc", ck.val_acc}});
  }
  j["checkpoints"] = std::move(cks);
  return j;
}

// ---- gen -------------------------------------------------------------

struct GenArgs {
  std::string kind = "uniform";
  int count = 1;
  std::uint64_t seed = 0;
  std::string out_dir;
  int n_lo = 6, n_hi = 200, m_lo = 3, m_hi = 15;
};

void run_gen(const GenArgs& a) {
  hlm::require(a.count >= 1, hlm::ErrorCode::config, "--count must be >= 1");
  hlm::require(a.kind == "uniform" || a.kind == "condind", hlm::ErrorCode::config,
               "--kind must be 'uniform' or 'condind'");

  // Generate everything up front; nothing is written until every dataset
  // exists, so a failed run leaves no partial output.
  struct Item {
    hlm::LabelMatrix x;
    hlm::LabelVector y;
    json meta;
  };
  std::vector<Item> items;
  items.reserve(a.count);
  if (a.kind == "uniform") {
    hlm::gen::GenConfig cfg;
    cfg.n_lo = a.n_lo;
    cfg.n_hi = a.n_hi;
    cfg.m_lo = a.m_lo;
    cfg.m_hi = a.m_hi;
    cfg.master_seed = a.seed;
    cfg.validate();
    for (int i = 0; i < a.count; ++i) {
      auto pair = hlm::gen::gen_pair(cfg, static_cast<std::uint64_t>(i));
      json meta;
      meta["kind"] = "uniform";
      meta["master_seed"] = pair.master_seed;
      meta["stream_id"] = pair.stream_id;
      meta["attempts"] = pair.attempts;
      meta["n"] = pair.x.rows;
      meta["m"] = pair.x.cols;
      meta["ranges"] = {{"n_lo", cfg.n_lo}, {"n_hi", cfg.n_hi}, {"m_lo", cfg.m_lo}, {"m_hi", cfg.m_hi}};
      items.push_back({std::move(pair.x), std::move(pair.y), std::move(meta)});
    }
  } else {
    hlm::gen::CondIndConfig cfg;
    cfg.num_datasets = a.count;
    cfg.n_lo = a.n_lo;
    cfg.n_hi = a.n_hi;
    cfg.m_lo = a.m_lo;
    cfg.m_hi = a.m_hi;
    cfg.validate();
    auto datasets = hlm::gen::gen_condind(cfg, a.seed);
    for (int i = 0; i < a.count; ++i) {
      json meta;
      meta["kind"] = "condind";
      meta["seed"] = a.seed;
      meta["index"] = i;
      meta["n"] = datasets[i].x.rows;
      meta["m"] = datasets[i].x.cols;
      meta["positive_prior"] = datasets[i].positive_prior;
      meta["accuracy"] = datasets[i].accuracy;
      meta["propensity"] = datasets[i].propensity;
      items.push_back({std::move(datasets[i].x), std::move(datasets[i].y), std::move(meta)});
    }
  }

  fs::create_directories(a.out_dir);
  char name[32];
  for (int i = 0; i < a.count; ++i) {
    std::snprintf(name, sizeof name, "ds_%05d", i);
    const fs::path dir = fs::path(a.out_dir) / name;
    fs::create_directories(dir);
    hlm::save_label_matrix((dir / "X.csv").string(), items[i].x);
    hlm::save_label_vector((dir / "y.csv").string(), items[i].y);
    write_text((dir / "meta.json").string(), items[i].meta.dump(2) + "\n");
  }
}

// ---- train -----------------------------------------------------------

void run_train(const std::string& config_path, const std::string& out_dir, int threads_override) {
  auto cfg = hlm::train::load_config(config_path);
  if (threads_override > 0) cfg.threads = threads_override;
  fs::create_directories(out_dir);

  char name[32];
  const auto result = hlm::train::train_select(
      cfg,
      [](const std::string& line) { std::cout << line << "\n" << std::flush; },
      [&](const hlm::train::RunOutcome& outcome) {
        std::snprintf(name, sizeof name, "run_%d", outcome.report.run_id);
        const fs::path dir = fs::path(out_dir) / name;
        fs::create_directories(dir);
        write_text((dir / "report.json").string(), report_to_json(outcome.report).dump(2) + "\n");
        if (!outcome.report.diverged) {
          hlm::save_params((dir / "final.model.json").string(), outcome.final_params);
        }
      });

  hlm::save_params((fs::path(out_dir) / "selected.model.json").string(), result.selected);
  json summary;
  summary["selected_run"] = result.selected_run;
  summary["num_runs"] = static_cast<int>(result.reports.size());
  write_text((fs::path(out_dir) / "selection.json").string(), summary.dump(2) + "\n");
  std::cout << "{\"selected_run\":" << result.selected_run << "}\n";
}

// ---- infer / finetune / oracle / mv / eval ----------------------------

void run_infer(const std::string& model_path, const std::string& matrix_path, int multiclass,
               const std::string& out_path) {
  const auto params = hlm::load_params(model_path);
  if (multiclass == 0) {
    const auto x = hlm::load_label_matrix(matrix_path, 0);
    const auto probs = hlm::forward(params, x);
    hlm::save_prob_column(out_path, probs.probs);
  } else {
    hlm::require(multiclass >= 2, hlm::ErrorCode::config, "--multiclass needs C >= 2");
    const auto x = hlm::load_label_matrix(matrix_path, multiclass);
    const auto soft = hlm::multiclass_infer(params, x);
    hlm::save_prob_matrix(out_path, soft.rows, soft.num_classes, soft.p);
  }
}

void run_finetune(const std::string& model_path, const std::string& matrix_path,
                  const std::string& labels_path, const std::string& out_path, double lr,
                  int epochs) {
  const auto params = hlm::load_params(model_path);
  const auto x = hlm::load_label_matrix(matrix_path, 0);
  hlm::LabeledSubset subset;
  for (const auto& [idx, lab] : hlm::load_index_label_pairs(labels_path)) {
    subset.indices.push_back(idx);
    subset.labels.push_back(static_cast<std::int8_t>(lab));
  }
  const auto tuned = hlm::finetune(params, x, subset, lr, epochs);
  hlm::save_params(out_path, tuned);
}

void run_oracle(const std::string& matrix_path, bool exact, std::uint64_t mc_accepted,
                std::uint64_t seed, int cap, const std::string& out_path) {
  const auto x = hlm::load_label_matrix(matrix_path, 0);
  hlm::oracle::OracleResult result;
  if (exact) {
    result = hlm::oracle::exact_estimate(x, cap);
  } else {
    result = hlm::oracle::mc_estimate(x, mc_accepted, seed);
  }
  json j;
  j["estimate"] = result.estimate;
  j["valid_count"] = result.valid_count;
  j["method"] = result.method_name();
  j["samples_drawn"] = result.samples_drawn;
  write_text(out_path, j.dump(2) + "\n");
}

void run_mv(const std::string& matrix_path, const std::string& out_path) {
  const auto x = hlm::load_label_matrix(matrix_path, 0);
  const auto probs = hlm::majority_vote(x);
  hlm::save_prob_column(out_path, probs.probs);
}

void run_eval(const std::string& pred_path, const std::string& truth_path,
              const std::string& metric, double threshold, int multiclass) {
  hlm::LabelVector pred;
  hlm::LabelVector truth;
  if (multiclass == 0) {
    hlm::ProbVector probs;
    probs.probs = hlm::load_prob_column(pred_path);
    pred = hlm::threshold_labels(probs, threshold);
    truth = hlm::load_label_vector(truth_path, 0);
  } else {
    hlm::require(metric == "acc", hlm::ErrorCode::config, "multi-class eval supports --metric acc");
    const auto rows = hlm::load_prob_rows(pred_path);
    hlm::SoftLabels soft;
    soft.rows = static_cast<int>(rows.size());
    soft.num_classes = static_cast<int>(rows[0].size());
    hlm::require(soft.num_classes == multiclass, hlm::ErrorCode::contract,
                 "prediction file has " + std::to_string(soft.num_classes) +
                     " columns, expected " + std::to_string(multiclass));
    for (const auto& row : rows) soft.p.insert(soft.p.end(), row.begin(), row.end());
    pred = hlm::argmax_labels(soft);
    truth = hlm::load_label_vector(truth_path, multiclass);
  }

  double value = 0.0;
  if (metric == "acc") {
    value = hlm::accuracy(pred, truth);
  } else if (metric == "f1") {
    value = hlm::f1_score(pred, truth, 1);
  } else {
    hlm::throw_error(hlm::ErrorCode::config, "--metric must be 'acc' or 'f1'");
  }
  json j;
  j["metric"] = metric;
  j["value"] = value;
  j["n"] = truth.size();
  std::cout << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hlm: weak-label aggregation with a pretrained hyper label model"};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate synthetic datasets");
  gen->add_option("--kind", gen_args.kind, "uniform (shape+rejection) or condind");
  gen->add_option("--count", gen_args.count, "number of datasets")->required();
  gen->add_option("--seed", gen_args.seed, "master seed");
  gen->add_option("--out", gen_args.out_dir, "output directory")->required();
  gen->add_option("--n-lo", gen_args.n_lo, "min data points");
  gen->add_option("--n-hi", gen_args.n_hi, "max data points");
  gen->add_option("--m-lo", gen_args.m_lo, "min labeling functions");
  gen->add_option("--m-hi", gen_args.m_hi, "max labeling functions");

  std::string train_config, train_out;
  int train_threads = 0;
  auto* train = app.add_subcommand("train", "Pre-train on on-the-fly synthetic batches");
  train->add_option("--config", train_config, "JSON training config")->required();
  train->add_option("--out", train_out, "checkpoint directory")->required();
  train->add_option("--threads", train_threads, "worker threads (0 = auto)");

  std::string infer_model, infer_matrix, infer_out;
  int infer_multiclass = 0;
  auto* infer = app.add_subcommand("infer", "Score a label matrix with a trained model");
  infer->add_option("--model", infer_model)->required();
  infer->add_option("--matrix", infer_matrix)->required();
  infer->add_option("--multiclass", infer_multiclass, "number of classes C (omit for binary)");
  infer->add_option("--out", infer_out)->required();

  std::string ft_model, ft_matrix, ft_labels, ft_out;
  double ft_lr = 1e-4;
  int ft_epochs = -1;
  auto* finetune = app.add_subcommand("finetune", "Adapt a model to revealed ground-truth labels");
  finetune->add_option("--model", ft_model)->required();
  finetune->add_option("--matrix", ft_matrix)->required();
  finetune->add_option("--labels", ft_labels, "CSV of index,label lines")->required();
  finetune->add_option("--out", ft_out)->required();
  finetune->add_option("--lr", ft_lr, "learning rate (default 1e-4)");
  finetune->add_option("--epochs", ft_epochs, "full-batch steps (default round(sqrt(|I|)))");

  std::string oracle_matrix, oracle_out;
  bool oracle_exact = false;
  std::uint64_t oracle_mc = 0, oracle_seed = 0;
  int oracle_cap = 20;
  auto* oracle = app.add_subcommand("oracle", "Mean of all valid labelings, exact or Monte-Carlo");
  oracle->add_option("--matrix", oracle_matrix)->required();
  oracle->add_flag("--exact", oracle_exact, "exact enumeration (default unless --mc)");
  oracle->add_option("--mc", oracle_mc, "Monte-Carlo with this many accepted samples");
  oracle->add_option("--seed", oracle_seed, "Monte-Carlo seed");
  oracle->add_option("--cap", oracle_cap, "max n for exact enumeration (default 20)");
  oracle->add_option("--out", oracle_out)->required();

  std::string mv_matrix, mv_out;
  auto* mv = app.add_subcommand("mv", "Majority-vote baseline");
  mv->add_option("--matrix", mv_matrix)->required();
  mv->add_option("--out", mv_out)->required();

  std::string eval_pred, eval_truth, eval_metric = "acc";
  double eval_threshold = 0.5;
  int eval_multiclass = 0;
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--pred", eval_pred)->required();
  eval->add_option("--truth", eval_truth)->required();
  eval->add_option("--metric", eval_metric, "acc or f1");
  eval->add_option("--threshold", eval_threshold, "positive threshold (ties -> +1)");
  eval->add_option("--multiclass", eval_multiclass, "number of classes C (omit for binary)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) run_gen(gen_args);
    if (train->parsed()) run_train(train_config, train_out, train_threads);
    if (infer->parsed()) run_infer(infer_model, infer_matrix, infer_multiclass, infer_out);
    if (finetune->parsed()) run_finetune(ft_model, ft_matrix, ft_labels, ft_out, ft_lr, ft_epochs);
    if (oracle->parsed()) {
      hlm::require(!(oracle_exact && oracle_mc > 0), hlm::ErrorCode::config,
                   "choose one of --exact or --mc");
      run_oracle(oracle_matrix, oracle_mc == 0, oracle_mc, oracle_seed, oracle_cap, oracle_out);
    }
    if (mv->parsed()) run_mv(mv_matrix, mv_out);
    if (eval->parsed()) run_eval(eval_pred, eval_truth, eval_metric, eval_threshold, eval_multiclass);
  } catch (const hlm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
