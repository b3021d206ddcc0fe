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

#ifndef FSBSED_EXPERIMENT_H_
#define FSBSED_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fsbsed/config.h"
#include "fsbsed/dataset.h"
#include "fsbsed/inference.h"
#include "fsbsed/metrics.h"
#include "fsbsed/trainer.h"

namespace fsbsed::experiment {

// ---- Pipeline steps shared by the command-line tool and the runner. ----

std::vector<data::Recording> LoadCorpus(const std::string& root, const Settings& s);

// Trains on `recordings` with the settings' episode, optimiser and network
// parameters.
protonet::TrainResult TrainFromSettings(const Settings& s,
                                        const std::vector<data::Recording>& recordings);

// Name written to the Audiofilename column: the wav file name. Throws
// DataError if two recordings share it.
std::vector<std::string> PredictionNames(const std::vector<data::Recording>& recordings);

// Detects events in every recording; files run in parallel on cfg.threads
// workers, each single threaded inside.
std::vector<inference::EventList> DetectAll(
    const nn::EmbeddingNetwork<float>& net,
    const std::vector<data::Recording>& recordings,
    const inference::InferenceConfig& cfg);

// Scores predictions against the recordings' annotations. Files without
// predictions count as empty; predictions for unknown files are an error.
metrics::EvalReport EvaluateAll(const std::vector<inference::EventList>& predictions,
                                const std::vector<data::Recording>& recordings,
                                const Settings& s);

// ---- Experiment plans. ----

struct SweepAxis {
  std::string key;                  // a config key
  std::vector<std::string> values;  // JSON text per value
};

struct RunSpec {
  std::string id;
  std::string overrides;  // JSON object applied on top of the plan base
  int n_trials = 0;       // 0: plan default
  std::vector<SweepAxis> sweep;
};

struct ExperimentPlan {
  std::string output_dir = "runs";
  std::string base = "{}";  // JSON object of settings shared by every run
  uint64_t base_seed = 0;
  int n_trials = 1;
  int parallel_runs = 1;
  std::vector<RunSpec> runs;

  void Validate() const;
};

// Plan file layout:
//   {"output_dir": ..., "base_seed": 0, "n_trials": 5, "parallel_runs": 1,
//    "base": {<settings>},
//    "runs": [{"id": "nhs", "settings": {...}, "n_trials": 5,
//              "sweep": {"inference.neg_segments": [50, 150]}}]}
ExperimentPlan ParsePlan(std::string_view json_text, const std::string& source);
ExperimentPlan LoadPlan(const std::filesystem::path& path);

using SweepPoint = std::vector<std::pair<std::string, std::string>>;

// Cartesian product in axis order, last axis varying fastest. No axes gives
// one empty point.
std::vector<SweepPoint> ExpandGrid(const std::vector<SweepAxis>& axes);
// "key=value;key=value", or "default" for the empty point.
std::string PointLabel(const SweepPoint& point);

uint64_t TrialSeed(uint64_t base_seed, const std::string& run_id, int trial);
// Negative-set seed of a trial: shared by every run so that models are
// compared on identical negative sets.
uint64_t TrialNegativeSeed(uint64_t base_seed, int trial);

struct TrialRow {
  std::string run_id;
  int trial = 0;
  uint64_t seed = 0;
  int point = 0;
  std::string config;  // PointLabel
  metrics::Scores scores;
  metrics::Counts counts;
};

struct PlanResult {
  std::vector<TrialRow> rows;  // run order, then trial, then point
  int trials_run = 0;
  int trials_skipped = 0;
};

// Executes every (run, trial). Each trial writes under
// <output_dir>/<run_id>/<trial>/ and finishes with a DONE marker; marked
// trials are read back instead of recomputed. Writes summary.csv and
// summary_ci.csv into output_dir.
PlanResult RunPlan(const ExperimentPlan& plan);

void WriteTrialRows(const std::filesystem::path& path, const std::vector<TrialRow>& rows);
std::vector<TrialRow> ReadTrialRows(const std::filesystem::path& path);
// Mean and 95% interval of F1 per (run, point); single-trial groups get a
// zero half width.
void WriteSummaryCi(const std::filesystem::path& path, const std::vector<TrialRow>& rows);

}  // namespace fsbsed::experiment

#endif  // FSBSED_EXPERIMENT_H_
