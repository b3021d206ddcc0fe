// Copyright (c) 2026 The fsbsed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "commands.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fsbsed/audio.h"
#include "fsbsed/checkpoint.h"
#include "fsbsed/error.h"
#include "fsbsed/experiment.h"
#include "fsbsed/features.h"
#include "json.hpp"

namespace fsbsed::cli {
namespace {

namespace fs = std::filesystem;

fs::path CheckpointPath(const experiment::Settings& s) {
  return s.checkpoint.empty() ? fs::path(s.output_dir) / "model.ckpt"
                              : fs::path(s.checkpoint);
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw DataError(fmt::format("{}: cannot write", path.string()));
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

}  // namespace

int RunTrain(const experiment::Settings& s) {
  const auto recordings = experiment::LoadCorpus(s.train_root, s);
  spdlog::info("train: {} recordings from {}", recordings.size(), s.train_root);
  const protonet::TrainResult result = experiment::TrainFromSettings(s, recordings);
  const fs::path ckpt = CheckpointPath(s);
  nn::SaveCheckpoint(ckpt, result.network, experiment::CheckpointMetadata(s));
  protonet::WriteTrainingLog(fs::path(s.output_dir) / "training_log.csv", result.log);
  WriteText(fs::path(s.output_dir) / "config.json", experiment::SettingsToJson(s) + "\n");
  const double best_acc =
      result.best_epoch >= 0 ? result.log[result.best_epoch].val_accuracy : 0.0;
  fmt::print("trained {} episodes ({}-way), best epoch {} with validation accuracy "
             "{:.3f}, embedding dim {}\ncheckpoint: {}\n",
             result.episodes, result.n_way, result.best_epoch, best_acc,
             result.network.embedding_dim(), ckpt.string());
  return 0;
}

int RunInfer(experiment::Settings s) {
  const fs::path ckpt_path = CheckpointPath(s);
  nn::Checkpoint ck = nn::LoadCheckpoint(ckpt_path);
  experiment::ApplyCheckpointMetadata(s, ck.metadata, ckpt_path.string());
  s.Validate();
  if (ck.network.config().input_height != s.features.feature_dim() ||
      ck.network.config().input_width != s.patch_frames) {
    throw DataError(fmt::format(
        "{}: network expects {}x{} patches but features give {}x{}",
        ckpt_path.string(), ck.network.config().input_height,
        ck.network.config().input_width, s.features.feature_dim(), s.patch_frames));
  }
  const auto recordings = experiment::LoadCorpus(s.eval_root, s);
  const auto predictions =
      experiment::DetectAll(ck.network, recordings, experiment::InferenceConfigOf(s));
  const fs::path out(s.output_dir);
  for (size_t i = 0; i < recordings.size(); ++i) {
    fs::path per_file = out / "predictions" / recordings[i].entry.subset /
                        recordings[i].entry.wav.filename();
    per_file.replace_extension(".csv");
    inference::WritePredictions(per_file, {predictions[i]});
  }
  inference::WritePredictions(out / "predictions.csv", predictions);
  size_t events = 0;
  for (const auto& p : predictions) events += p.events.size();
  fmt::print("{} events in {} files\npredictions: {}\n", events, predictions.size(),
             (out / "predictions.csv").string());
  return 0;
}

int RunEval(const experiment::Settings& s, const EvalArgs& args) {
  const fs::path pred_path = args.predictions.empty()
                                 ? fs::path(s.output_dir) / "predictions.csv"
                                 : fs::path(args.predictions);
  const auto predictions = inference::ReadPredictions(pred_path);
  if (s.eval_root.empty()) throw UsageError("eval: eval_root is not set");
  std::vector<data::Recording> truth;
  for (const data::RecordingEntry& e : data::ScanDatasetRoot(s.eval_root)) {
    truth.push_back({e, data::ParseAnnotations(e.csv), nullptr, 0.0});
  }
  const metrics::EvalReport report = experiment::EvaluateAll(predictions, truth, s);
  const fs::path out(s.output_dir);
  metrics::WriteReportCsv(out / "report.csv", report);
  metrics::WriteFileCsv(out / "files.csv", report);
  const std::string table = metrics::FormatReportTable(report);
  WriteText(out / "report.txt", table);
  fmt::print("{}", table);
  return 0;
}

int RunFeatures(const experiment::Settings& s, const FeaturesArgs& args) {
  if (args.input.empty() || args.output.empty()) {
    throw UsageError("features: --input and --output are required");
  }
  dsp::DumpFormat format;
  if (args.format == "bin") {
    format = dsp::DumpFormat::kBinary;
  } else if (args.format == "csv") {
    format = dsp::DumpFormat::kCsv;
  } else {
    throw UsageError(fmt::format("features: unknown format '{}' (bin|csv)", args.format));
  }
  const audio::AudioClip clip =
      audio::Resample(audio::DecodeWav(args.input), s.features.sample_rate);
  dsp::FeatureMatrix features = dsp::BuildFeatures(clip, s.features);
  if (s.standardize) dsp::StandardizeColumns(features);
  dsp::WriteFeatureMatrix(args.output, features, format);
  fmt::print("{} frames x {} ({}) -> {}\n", features.frames(), features.dim(),
             dsp::FeatureSetName(s.features.feature_set), args.output);
  return 0;
}

int RunReport(const experiment::Settings& s, const ReportArgs& args) {
  const fs::path in(args.input);
  const fs::path summary = in / "summary.csv";
  const fs::path report = in / "report.csv";
  if (!fs::exists(summary) && !fs::exists(report)) {
    throw DataError(fmt::format(
        "report: {} holds neither summary.csv (from sweep) nor report.csv (from eval)",
        in.string()));
  }
  const fs::path out = s.output_dir.empty() ? in : fs::path(s.output_dir);
  if (fs::exists(summary)) {
    std::string csv = "n_neg,n_sets,trial,f1,run_id,config\n";
    for (const experiment::TrialRow& r : experiment::ReadTrialRows(summary)) {
      // Trial settings, then the sweep point on top.
      experiment::Settings ts;
      const fs::path cfg = in / r.run_id / std::to_string(r.trial) / "config.json";
      if (fs::exists(cfg)) ts = experiment::LoadSettingsFile(cfg);
      if (r.config != "default") {
        std::stringstream ss(r.config);
        std::string kv;
        while (std::getline(ss, kv, ';')) {
          const size_t eq = kv.find('=');
          if (eq == std::string::npos) continue;
          experiment::ApplyOverride(ts, kv.substr(0, eq), kv.substr(eq + 1));
        }
      }
      csv += fmt::format("{},{},{},{:.2f},{},{}\n", ts.inference.neg_segments_per_set,
                         ts.inference.n_negative_sets, r.trial, r.scores.f1, r.run_id,
                         r.config);
    }
    WriteText(out / "fig2.csv", csv);
    fmt::print("wrote {}\n", (out / "fig2.csv").string());
  }
  if (fs::exists(report)) {
    std::ifstream rin(report);
    std::string line;
    std::getline(rin, line);
    if (line.rfind("group,precision,recall,f1", 0) != 0) {
      throw DataError(report.string() + ": not a report.csv from eval");
    }
    std::string csv = "species,precision,recall,f1\n";
    while (std::getline(rin, line)) {
      const auto f = SplitCsv(line);
      if (f.size() < 4 || f[0] == "overall") continue;
      csv += fmt::format("{},{},{},{}\n", f[0], f[1], f[2], f[3]);
    }
    WriteText(out / "fig3.csv", csv);
    fmt::print("wrote {}\n", (out / "fig3.csv").string());
  }
  return 0;
}

int RunSweep(const experiment::Settings& s, const SweepArgs& args) {
  (void)s;
  if (args.plan.empty()) throw UsageError("sweep: --plan is required");
  experiment::ExperimentPlan plan = experiment::LoadPlan(args.plan);
  if (!args.output_dir.empty()) plan.output_dir = args.output_dir;
  const experiment::PlanResult r = experiment::RunPlan(plan);
  fmt::print("{} trials run, {} reused; summary: {}\n", r.trials_run, r.trials_skipped,
             (fs::path(plan.output_dir) / "summary.csv").string());
  return 0;
}

}  // namespace fsbsed::cli
