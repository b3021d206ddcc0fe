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

#ifndef FSBSED_METRICS_H_
#define FSBSED_METRICS_H_

#include <filesystem>
#include <string>
#include <vector>

#include "fsbsed/annotations.h"
#include "fsbsed/inference.h"

namespace fsbsed::metrics {

using inference::Event;

inline constexpr double kDefaultMinIou = 0.3;

double Iou(const Event& a, const Event& b);

struct Counts {
  int tp = 0;
  int fp = 0;
  int fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

// Size of a maximum matching in a bipartite graph given as adjacency lists
// from left to right vertices (Hopcroft-Karp).
int MaximumMatching(const std::vector<std::vector<int>>& adjacency, int right_count);

// One-to-one matching of predictions to ground truth maximising the number
// of pairs whose IoU reaches min_iou.
Counts MatchEvents(const std::vector<Event>& predicted,
                   const std::vector<Event>& ground_truth,
                   double min_iou = kDefaultMinIou);

// POS events of the target class that start at or after the offset of the
// n_shots-th POS event; earlier events are support, not targets.
std::vector<Event> ScoringTargets(const data::AnnotationTable& table,
                                  int n_shots, const std::string& target_class = "");

struct Scores {
  double precision = 0.0;  // percent
  double recall = 0.0;
  double f1 = 0.0;
};

// Percentages rounded to two decimals. P is 0 without predictions, R is 0
// without ground truth, F1 is 0 when P + R is 0.
Scores ComputeScores(const Counts& c);

struct FileResult {
  std::string file;
  std::string group;  // species or dataset subset
  Counts counts;
};

struct GroupRow {
  std::string group;
  Counts counts;
  Scores scores;
};

struct EvalReport {
  std::vector<FileResult> files;
  std::vector<GroupRow> groups;  // sorted by name
  GroupRow overall;              // group "overall", pooled counts
};

// Micro-averaged scores per group and over all files.
EvalReport Aggregate(const std::vector<FileResult>& files);

struct TrialSummary {
  int n = 0;
  double mean = 0.0;
  double stddev = 0.0;      // sample standard deviation
  double half_width = 0.0;  // 95% Student-t interval
};

// Requires at least two values.
TrialSummary SummarizeTrials(const std::vector<double>& values,
                             double confidence = 0.95);

// CSV: group,precision,recall,f1,tp,fp,fn (overall row last).
void WriteReportCsv(const std::filesystem::path& path, const EvalReport& report);
// Aligned plain-text table of the same rows.
std::string FormatReportTable(const EvalReport& report);
// CSV: file,group,tp,fp,fn.
void WriteFileCsv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace fsbsed::metrics

#endif  // FSBSED_METRICS_H_
