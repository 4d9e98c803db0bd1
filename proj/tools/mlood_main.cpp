/*
 * Copyright 2026 The mlood Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// mlood: generate toy tasks, train the linear classifier, score, tune and
// evaluate OOD detectors. Run `mlood <command> --help` for flags.
//
// Failures print "error: <Code>: <message>" on stderr and exit with the
// numeric ErrorCode value. Options may also come from --config FILE holding
// key=value lines (a [command] section header selects the subcommand);
// command-line flags take precedence.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mlood/mlood.hpp"

namespace {

using mlood::fs::path;

void AddSynth(CLI::App& app, mlood::SynthOptions& opt) {
  auto* cmd = app.add_subcommand("synth", "Generate and persist a toy task");
  auto& c = opt.config;
  cmd->add_option("--out", opt.out_dir, "Output task directory")->required();
  cmd->add_option("--seed", c.seed, "Generator seed");
  cmd->add_option("--dim", c.dim, "Input dimension");
  cmd->add_option("--labels", c.num_labels, "In-distribution labels K");
  cmd->add_option("--ood-prototypes", c.num_ood_prototypes, "OOD prototypes");
  cmd->add_option("--proto-scale", c.proto_scale, "Prototype scale");
  cmd->add_option("--noise-sigma", c.noise_sigma, "Gaussian noise stddev");
  cmd->add_option("--max-positive", c.max_positive, "Max positive labels per sample");
  cmd->add_option("--n-train", c.n_train);
  cmd->add_option("--n-test-in", c.n_test_in);
  cmd->add_option("--n-test-ood", c.n_test_ood);
}

void AddTrain(CLI::App& app, mlood::TrainOptions& opt) {
  auto* cmd = app.add_subcommand("train", "Train the linear multi-label model");
  auto& t = opt.train;
  cmd->add_option("--task", opt.task_dir, "Task directory")->required();
  cmd->add_option("--model-out", opt.model_out, "Model matrix file")->required();
  cmd->add_option("--report", opt.report_out, "Training report JSON");
  cmd->add_option("--seed", t.seed, "Initialization and shuffling seed");
  cmd->add_option("--lr", t.learning_rate);
  cmd->add_option("--epochs", t.epochs);
  cmd->add_option("--batch", t.batch_size);
  cmd->add_option("--beta1", t.beta1);
  cmd->add_option("--beta2", t.beta2);
  cmd->add_option("--adam-eps", t.adam_epsilon);
}

struct ScoreFlags {
  std::string method;
  std::optional<std::string> logits, inputs, fit_features, fit_labels, task, model;
  std::string split = "test_in";
  std::uint64_t seed = 0;
  std::string out;
};

void AddScore(CLI::App& app, ScoreFlags& f) {
  auto* cmd = app.add_subcommand("score", "Apply a scoring method to data");
  cmd->add_option("--method", f.method,
                  "Score spec, e.g. energy:sum, odin:max@T=1000,eps=0.002, lof@k=20")
      ->required();
  cmd->add_option("--logits", f.logits, "Logits matrix file");
  cmd->add_option("--inputs", f.inputs, "Inputs/features matrix file");
  cmd->add_option("--fit-features", f.fit_features, "Reference features for fitted detectors");
  cmd->add_option("--fit-labels", f.fit_labels, "Reference labels (Mahalanobis)");
  cmd->add_option("--task", f.task, "Toy task directory (instead of files)");
  cmd->add_option("--split", f.split, "Task split: train, test_in, test_ood");
  cmd->add_option("--model", f.model, "Linear model file");
  cmd->add_option("--seed", f.seed, "Seed for randomized detectors");
  cmd->add_option("--out", f.out, "Output score file (.csv or binary)")->required();
}

struct TuneFlags {
  mlood::TuneOptions opt;
  std::string method = "odin";
  std::string aggregation = "max";
};

void AddTune(CLI::App& app, TuneFlags& f) {
  auto* cmd = app.add_subcommand("tune", "Grid-search ODIN or Mahalanobis on synthetic validation data");
  cmd->add_option("--task", f.opt.task_dir)->required();
  cmd->add_option("--model", f.opt.model)->required();
  cmd->add_option("--method", f.method, "odin or mahalanobis");
  cmd->add_option("--aggregation", f.aggregation, "max, sum or top<k>");
  cmd->add_option("--n-per-part", f.opt.n_per_part, "Rows per validation part");
  cmd->add_option("--n-in-val", f.opt.n_in_val, "In-distribution validation rows");
  cmd->add_option("--seed", f.opt.seed);
  cmd->add_option("--out", f.opt.out, "TuneResult JSON")->required();
}

void AddEval(CLI::App& app, mlood::EvalOptions& opt) {
  auto* cmd = app.add_subcommand("eval", "FPR@TPR, AUROC and AUPR from score files");
  cmd->add_option("--in", opt.in_scores, "In-distribution scores")->required();
  cmd->add_option("--ood", opt.ood_scores, "OOD scores")->required();
  cmd->add_option("--tpr", opt.tpr_target, "Target TPR");
  cmd->add_option("--method", opt.method, "Method name for the CSV row");
  cmd->add_option("--aggregation", opt.aggregation, "Aggregation name for the CSV row");
  cmd->add_option("--json", opt.json_out, "EvalReport JSON");
  cmd->add_option("--csv", opt.csv_out, "EvalReport CSV");
  cmd->add_option("--curve", opt.curve_out, "ROC points CSV (threshold,fpr,tpr)");
  cmd->add_option("--in-logits", opt.in_logits, "In-distribution logits for histograms");
  cmd->add_option("--ood-logits", opt.ood_logits, "OOD logits for histograms");
  cmd->add_option("--histogram", opt.histogram_out, "Label-wise energy histogram CSV");
  cmd->add_option("--bins", opt.bins);
}

void AddBench(CLI::App& app, mlood::BenchOptions& opt) {
  auto* cmd = app.add_subcommand("bench", "Evaluate every method and aggregation on one task");
  cmd->add_option("--task", opt.task_dir)->required();
  cmd->add_option("--model", opt.model)->required();
  cmd->add_option("--out", opt.out_csv, "Combined CSV")->required();
  cmd->add_option("--seed", opt.seed);
  cmd->add_option("--tpr", opt.tpr_target);
  cmd->add_option("--n-per-part", opt.n_per_part);
  cmd->add_option("--n-in-val", opt.n_in_val);
  cmd->add_option("--lof-k", opt.lof_k);
  cmd->add_option("--trees", opt.forest_trees);
  cmd->add_option("--subsample", opt.forest_subsample);
}

mlood::Aggregator ParseAggregator(const std::string& text) {
  const auto spec = mlood::ParseScoreSpec("energy:" + text);
  return *spec.aggregator;
}

int Dispatch(CLI::App& app, mlood::SynthOptions& synth, mlood::TrainOptions& train,
             ScoreFlags& score, TuneFlags& tune, mlood::EvalOptions& eval,
             mlood::BenchOptions& bench) {
  if (app.got_subcommand("synth")) {
    const auto task = mlood::RunSynth(synth);
    std::cerr << "wrote task to " << synth.out_dir << " (min prototype angle "
              << task.min_prototype_angle << " rad)\n";
  } else if (app.got_subcommand("train")) {
    const auto out = mlood::RunTrain(train);
    std::cerr << "loss " << out.initial_loss << " -> " << out.final_loss
              << ", test mAP " << out.test_map.mean_average_precision << "\n";
  } else if (app.got_subcommand("score")) {
    mlood::RunConfig cfg;
    cfg.method = mlood::ParseScoreSpec(score.method);
    auto as_path = [](const std::optional<std::string>& s) -> std::optional<path> {
      if (!s) return std::nullopt;
      return path(*s);
    };
    cfg.logits = as_path(score.logits);
    cfg.inputs = as_path(score.inputs);
    cfg.fit_features = as_path(score.fit_features);
    cfg.fit_labels = as_path(score.fit_labels);
    cfg.task_dir = as_path(score.task);
    cfg.model = as_path(score.model);
    cfg.split = mlood::ParseTaskSplit(score.split);
    cfg.seed = score.seed;
    cfg.output = score.out;
    mlood::RunScore(cfg, std::cerr);
  } else if (app.got_subcommand("tune")) {
    if (tune.method == "odin") {
      tune.opt.method = mlood::BaseScore::kOdin;
    } else if (tune.method == "mahalanobis") {
      tune.opt.method = mlood::BaseScore::kMahalanobis;
    } else {
      mlood::Fail(mlood::ErrorCode::kInvalidSpec, "tune supports odin or mahalanobis");
    }
    tune.opt.aggregator = ParseAggregator(tune.aggregation);
    const auto result = mlood::RunTune(tune.opt);
    std::cerr << "best " << mlood::FormatParams(result.best_params)
              << " validation FPR95 " << result.objective << "\n";
  } else if (app.got_subcommand("eval")) {
    const auto r = mlood::RunEval(eval);
    std::cout << mlood::ToJson(r).dump() << "\n";
  } else if (app.got_subcommand("bench")) {
    const auto rows = mlood::RunBench(bench);
    std::cout << mlood::BenchCsv(rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-label out-of-distribution detection toolkit"};
  app.set_config("--config", "", "key=value configuration file");
  app.require_subcommand(1);

  mlood::SynthOptions synth;
  mlood::TrainOptions train;
  ScoreFlags score;
  TuneFlags tune;
  mlood::EvalOptions eval;
  mlood::BenchOptions bench;
  AddSynth(app, synth);
  AddTrain(app, train);
  AddScore(app, score);
  AddTune(app, tune);
  AddEval(app, eval);
  AddBench(app, bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return Dispatch(app, synth, train, score, tune, eval, bench);
  } catch (const mlood::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 1;
  }
}
