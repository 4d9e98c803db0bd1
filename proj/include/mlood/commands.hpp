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

// Library side of the `mlood` command-line tool. Each Run* function performs
// one subcommand end to end and writes its outputs atomically; the CLI only
// parses flags into these option structs.

#ifndef MLOOD_COMMANDS_HPP_
#define MLOOD_COMMANDS_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "mlood/core.hpp"
#include "mlood/detector.hpp"
#include "mlood/error.hpp"
#include "mlood/harness.hpp"
#include "mlood/io.hpp"
#include "mlood/linear_model.hpp"
#include "mlood/metrics.hpp"
#include "mlood/scoring.hpp"
#include "mlood/tuning.hpp"

namespace mlood {

namespace fs = std::filesystem;

inline void RequireFile(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) {
    Fail(ErrorCode::kMissingArtifact, what + " not found: " + path.string());
  }
}

inline LinearModel ReadModel(const fs::path& path) {
  RequireFile(path, "model");
  return ModelFromMatrix(ReadMatrix(path));
}

inline ToyTask LoadTask(const fs::path& dir) {
  RequireFile(dir / "config.json", "task");
  return ReadTask(dir);
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  ToyConfig config;
  fs::path out_dir;
};

inline ToyTask RunSynth(const SynthOptions& opt) {
  ToyTask task = GenerateTask(opt.config);
  WriteTask(opt.out_dir, task);
  return task;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  fs::path task_dir;
  fs::path model_out;
  fs::path report_out;  // optional
  TrainConfig train;
  double init_stddev = 0.01;
};

struct TrainOutcome {
  LinearModel model;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  MapReport test_map;
};

// Initial weights come from Rng(seed).Split("init"), N(0, init_stddev^2).
inline TrainOutcome RunTrain(const TrainOptions& opt) {
  const ToyTask task = LoadTask(opt.task_dir);
  const LinearModel init = LinearModel::RandomInit(
      task.train.num_labels(), task.train.inputs().cols(), opt.init_stddev,
      Rng(opt.train.seed).Split("init"));
  TrainOutcome out;
  out.initial_loss = BceLoss(init, task.train);
  out.model = Train(init, task.train, opt.train);
  out.final_loss = BceLoss(out.model, task.train);
  out.test_map = MeanAveragePrecision(out.model, task.test_in);

  WriteMatrix(opt.model_out, ModelToMatrix(out.model));
  if (!opt.report_out.empty()) {
    Json report{{"initial_loss", out.initial_loss},
                {"final_loss", out.final_loss},
                {"test_in_map", out.test_map.mean_average_precision},
                {"evaluated_labels", out.test_map.evaluated_labels},
                {"skipped_labels", out.test_map.skipped_labels},
                {"learning_rate", opt.train.learning_rate},
                {"epochs", opt.train.epochs},
                {"batch_size", opt.train.batch_size},
                {"seed", opt.train.seed}};
    WriteJson(opt.report_out, report);
  }
  return out;
}

// ---------------------------------------------------------------- score

enum class TaskSplit { kTrain, kTestIn, kTestOod };

inline TaskSplit ParseTaskSplit(const std::string& name) {
  if (name == "train") return TaskSplit::kTrain;
  if (name == "test_in") return TaskSplit::kTestIn;
  if (name == "test_ood") return TaskSplit::kTestOod;
  Fail(ErrorCode::kInvalidSpec, "unknown split '" + name + "'");
}

// One scoring run. Data comes either from files (logits and/or inputs) or
// from a persisted toy task, never both.
struct RunConfig {
  ScoreSpec method;
  // File source.
  std::optional<fs::path> logits;
  std::optional<fs::path> inputs;
  std::optional<fs::path> fit_features;
  std::optional<fs::path> fit_labels;
  // Toy-task source.
  std::optional<fs::path> task_dir;
  TaskSplit split = TaskSplit::kTestIn;
  // Either source.
  std::optional<fs::path> model;
  double tpr_target = 0.95;
  std::uint64_t seed = 0;
  fs::path output;
};

inline void ValidateRunConfig(const RunConfig& cfg) {
  const bool files = cfg.logits || cfg.inputs || cfg.fit_features || cfg.fit_labels;
  const bool toy = cfg.task_dir.has_value();
  if (files == toy) {
    Fail(ErrorCode::kInvalidSpec,
         "give exactly one input source: data files or a toy task directory");
  }
  if (cfg.output.empty()) Fail(ErrorCode::kInvalidSpec, "missing output path");
}

inline ScoreVector RunScore(RunConfig cfg, std::ostream& diag) {
  ValidateRunConfig(cfg);
  std::optional<LinearModel> model;
  if (cfg.model) model = ReadModel(*cfg.model);

  std::optional<Matrix> logits;
  std::optional<Matrix> inputs;
  std::optional<Matrix> fit_features;
  std::optional<Matrix> fit_labels;
  if (cfg.task_dir) {
    const ToyTask task = LoadTask(*cfg.task_dir);
    switch (cfg.split) {
      case TaskSplit::kTrain: inputs = task.train.inputs(); break;
      case TaskSplit::kTestIn: inputs = task.test_in.inputs(); break;
      case TaskSplit::kTestOod: inputs = task.test_ood_inputs; break;
    }
    fit_features = task.train.inputs();
    fit_labels = task.train.labels();
  } else {
    if (cfg.logits) {
      RequireFile(*cfg.logits, "logits");
      logits = ReadMatrix(*cfg.logits);
    }
    if (cfg.inputs) {
      RequireFile(*cfg.inputs, "inputs");
      inputs = ReadMatrix(*cfg.inputs);
    }
    if (cfg.fit_features) {
      RequireFile(*cfg.fit_features, "fit features");
      fit_features = ReadMatrix(*cfg.fit_features);
    }
    if (cfg.fit_labels) {
      RequireFile(*cfg.fit_labels, "fit labels");
      fit_labels = ReadMatrix(*cfg.fit_labels);
    }
  }

  ScoreSpec spec = cfg.method;
  const bool can_perturb = model.has_value() && inputs.has_value();
  if (spec.base == BaseScore::kOdin && !can_perturb && spec.Param("eps", 0.0) != 0.0) {
    diag << "warning: ODIN on logits only; perturbation needs a model and "
            "inputs, using eps = 0\n";
    spec.hyper["eps"] = 0.0;
  }
  if (spec.base == BaseScore::kIsolationForest && !spec.hyper.contains("seed")) {
    spec.hyper["seed"] = static_cast<double>(cfg.seed);
  }

  FittedDetector fitted;
  if (NeedsFit(spec)) {
    if (!fit_features) {
      Fail(ErrorCode::kMissingArtifact,
           std::string(BaseScoreName(spec.base)) + " needs reference features");
    }
    fitted = FitDetector(spec, *fit_features, fit_labels ? &*fit_labels : nullptr);
  }
  ScoreData data;
  data.logits = logits ? &*logits : nullptr;
  data.inputs = inputs ? &*inputs : nullptr;
  data.model = model ? &*model : nullptr;
  ScoreVector scores = Score(spec, data, &fitted);
  WriteScores(cfg.output, scores);
  return scores;
}

// ---------------------------------------------------------------- tune

struct TuneOptions {
  fs::path task_dir;
  fs::path model;
  BaseScore method = BaseScore::kOdin;  // kOdin or kMahalanobis
  Aggregator aggregator = Aggregator::Max();
  std::size_t n_per_part = 200;
  std::size_t n_in_val = 1000;
  std::uint64_t seed = 0;
  fs::path out;  // optional JSON
};

// In-distribution validation inputs: the first n_in_val training rows. The
// synthetic OOD parts are built from the training inputs too.
inline Matrix InValidationInputs(const ToyTask& task, std::size_t n_in_val) {
  return task.train.inputs().Slice(0, std::min(n_in_val, task.train.size()));
}

inline TuneResult RunTune(const TuneOptions& opt) {
  const ToyTask task = LoadTask(opt.task_dir);
  const LinearModel model = ReadModel(opt.model);
  const ValidationSet val = SynthValidation(
      task.train.inputs(), opt.n_per_part, Rng(opt.seed).Split("validation"));
  const Matrix in_val = InValidationInputs(task, opt.n_in_val);
  TuneResult result;
  if (opt.method == BaseScore::kOdin) {
    result = TuneOdin(model, val, in_val, opt.aggregator);
  } else if (opt.method == BaseScore::kMahalanobis) {
    const auto fitted = FitMahalanobis(task.train.inputs(), task.train.labels());
    result = TuneMahalanobis(fitted, model, val, in_val, opt.aggregator);
  } else {
    Fail(ErrorCode::kInvalidSpec, "only odin and mahalanobis are tunable");
  }
  if (!opt.out.empty()) WriteJson(opt.out, ToJson(result));
  return result;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  fs::path in_scores;
  fs::path ood_scores;
  double tpr_target = 0.95;
  std::string method = "unknown";
  std::string aggregation = "none";
  fs::path json_out;   // optional
  fs::path csv_out;    // optional
  fs::path curve_out;  // optional (threshold, fpr, tpr) CSV
  // Optional per-label energy histograms from raw logits.
  fs::path in_logits;
  fs::path ood_logits;
  fs::path histogram_out;
  std::size_t bins = 50;
};

// Rows: split,label,bin_lo,bin_hi,count over shared equal-width bins of the
// label-wise energy softplus(f_i).
inline std::string EnergyHistogramCsv(const Matrix& in_logits,
                                      const Matrix& ood_logits,
                                      std::size_t bins) {
  if (in_logits.cols() != ood_logits.cols()) {
    Fail(ErrorCode::kDimensionMismatch, "in and OOD logits differ in label count");
  }
  if (bins < 1) Fail(ErrorCode::kInvalidArgument, "need at least one bin");
  const Matrix in_e = LabelwiseEnergy(in_logits).values();
  const Matrix ood_e = LabelwiseEnergy(ood_logits).values();
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (const Matrix* m : {&in_e, &ood_e}) {
    for (double v : m->data()) {
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  if (hi <= lo) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::string out = "split,label,bin_lo,bin_hi,count\n";
  for (const auto& [name, m] : {std::pair{"in", &in_e}, std::pair{"ood", &ood_e}}) {
    for (std::size_t label = 0; label < m->cols(); ++label) {
      std::vector<std::size_t> counts(bins, 0);
      for (std::size_t r = 0; r < m->rows(); ++r) {
        auto b = static_cast<std::size_t>(((*m)(r, label) - lo) / width);
        ++counts[std::min(b, bins - 1)];
      }
      for (std::size_t b = 0; b < bins; ++b) {
        out += std::string(name) + ',' + std::to_string(label) + ',' +
               FormatDouble(lo + width * static_cast<double>(b)) + ',' +
               FormatDouble(lo + width * static_cast<double>(b + 1)) + ',' +
               std::to_string(counts[b]) + '\n';
      }
    }
  }
  return out;
}

inline EvalReport RunEval(const EvalOptions& opt) {
  RequireFile(opt.in_scores, "in-distribution scores");
  RequireFile(opt.ood_scores, "OOD scores");
  const ScoreVector in = ReadScores(opt.in_scores);
  const ScoreVector ood = ReadScores(opt.ood_scores);
  const EvalReport report = Evaluate(in, ood, opt.tpr_target);

  // Compute every optional artifact before writing any of them.
  std::string curve;
  if (!opt.curve_out.empty()) {
    curve = "threshold,fpr,tpr\n";
    for (const auto& p : RocCurve(in.values(), ood.values())) {
      curve += FormatDouble(p.threshold) + ',' + FormatDouble(p.fpr) + ',' +
               FormatDouble(p.tpr) + '\n';
    }
  }
  std::string histogram;
  if (!opt.histogram_out.empty()) {
    RequireFile(opt.in_logits, "in-distribution logits");
    RequireFile(opt.ood_logits, "OOD logits");
    histogram = EnergyHistogramCsv(ReadMatrix(opt.in_logits),
                                   ReadMatrix(opt.ood_logits), opt.bins);
  }

  if (!opt.json_out.empty()) WriteJson(opt.json_out, ToJson(report));
  if (!opt.csv_out.empty()) {
    AtomicWriteFile(opt.csv_out, std::string(kEvalCsvHeader) + "\n" +
                                     EvalCsvRow(opt.method, opt.aggregation, report) +
                                     "\n");
  }
  if (!opt.curve_out.empty()) AtomicWriteFile(opt.curve_out, curve);
  if (!opt.histogram_out.empty()) AtomicWriteFile(opt.histogram_out, histogram);
  return report;
}

// ---------------------------------------------------------------- bench

struct BenchOptions {
  fs::path task_dir;
  fs::path model;
  fs::path out_csv;  // optional
  std::uint64_t seed = 0;
  double tpr_target = 0.95;
  std::size_t n_per_part = 200;
  std::size_t n_in_val = 1000;
  std::size_t lof_k = kDefaultLofNeighbors;
  std::size_t forest_trees = kDefaultForestTrees;
  std::size_t forest_subsample = kDefaultForestSubsample;
};

struct BenchRow {
  ScoreSpec spec;
  EvalReport report;
};

inline std::string FormatParams(const ParamMap& params) {
  std::string out;
  for (const auto& [k, v] : params) {
    if (!out.empty()) out += ';';
    out += k + '=' + FormatDouble(v);
  }
  return out;
}

// max < sum < top1 < top2 < ... < none (global scores).
inline std::tuple<int, std::size_t> AggregatorOrder(const ScoreSpec& spec) {
  if (!spec.aggregator) return {3, 0};
  switch (spec.aggregator->kind) {
    case Aggregator::Kind::kMax: return {0, 0};
    case Aggregator::Kind::kSum: return {1, 0};
    case Aggregator::Kind::kTopK: return {2, spec.aggregator->k};
  }
  return {3, 0};
}

inline std::string BenchCsv(const std::vector<BenchRow>& rows) {
  std::string out = std::string(kEvalCsvHeader) + ",params\n";
  for (const auto& row : rows) {
    out += EvalCsvRow(row.spec.MethodName(), row.spec.AggregationName(),
                      row.report) +
           ',' + FormatParams(row.spec.hyper) + '\n';
  }
  return out;
}

// Every method and aggregation on one task: logit, prob, odin, mahalanobis
// and energy under max and sum; energy under top-k for k = 1..K; msp, lof and
// iforest. ODIN and Mahalanobis are tuned per aggregator on synthetic
// validation data first. Test-in inputs are in-distribution, test-OOD inputs
// are OOD, and the fitted detectors see training inputs only.
inline std::vector<BenchRow> RunBench(const BenchOptions& opt) {
  const ToyTask task = LoadTask(opt.task_dir);
  const LinearModel model = ReadModel(opt.model);
  const Matrix& train_x = task.train.inputs();
  const Matrix& in_x = task.test_in.inputs();
  const Matrix& ood_x = task.test_ood_inputs;
  const Matrix in_logits = Forward(model, in_x);
  const Matrix ood_logits = Forward(model, ood_x);
  const std::size_t k = model.num_labels();

  const Rng root(opt.seed);
  const ValidationSet val =
      SynthValidation(train_x, opt.n_per_part, root.Split("validation"));
  const Matrix in_val = InValidationInputs(task, opt.n_in_val);
  const MahalanobisModel maha = FitMahalanobis(train_x, task.train.labels());

  std::vector<ScoreSpec> specs;
  for (BaseScore base : {BaseScore::kLogit, BaseScore::kSigmoidProb,
                         BaseScore::kEnergy}) {
    specs.push_back({base, Aggregator::Max(), {}});
    specs.push_back({base, Aggregator::Sum(), {}});
  }
  for (std::size_t top = 1; top <= k; ++top) {
    specs.push_back({BaseScore::kEnergy, Aggregator::TopK(top), {}});
  }
  specs.push_back({BaseScore::kMsp, std::nullopt, {}});
  for (Aggregator agg : {Aggregator::Max(), Aggregator::Sum()}) {
    specs.push_back({BaseScore::kOdin, agg, TuneOdin(model, val, in_val, agg).best_params});
    specs.push_back({BaseScore::kMahalanobis, agg,
                     TuneMahalanobis(maha, model, val, in_val, agg).best_params});
  }
  specs.push_back({BaseScore::kLof, std::nullopt,
                   {{"k", static_cast<double>(opt.lof_k)}}});
  specs.push_back(
      {BaseScore::kIsolationForest,
       std::nullopt,
       {{"trees", static_cast<double>(opt.forest_trees)},
        {"subsample",
         static_cast<double>(std::min(opt.forest_subsample, train_x.rows()))},
        {"seed", static_cast<double>(opt.seed)}}});

  std::vector<BenchRow> rows;
  for (const ScoreSpec& spec : specs) {
    FittedDetector fitted;
    if (spec.base == BaseScore::kMahalanobis) {
      fitted.mahalanobis = maha;
    } else if (NeedsFit(spec)) {
      fitted = FitDetector(spec, train_x, &task.train.labels());
    }
    const ScoreData in_data{&in_logits, &in_x, &model};
    const ScoreData ood_data{&ood_logits, &ood_x, &model};
    rows.push_back({spec, Evaluate(Score(spec, in_data, &fitted),
                                   Score(spec, ood_data, &fitted),
                                   opt.tpr_target)});
  }
  std::sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tuple(a.spec.MethodName(), AggregatorOrder(a.spec)) <
           std::tuple(b.spec.MethodName(), AggregatorOrder(b.spec));
  });
  if (!opt.out_csv.empty()) AtomicWriteFile(opt.out_csv, BenchCsv(rows));
  return rows;
}

}  // namespace mlood

#endif  // MLOOD_COMMANDS_HPP_
