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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fsbsed/annotations.h"
#include "fsbsed/error.h"
#include "fsbsed/metrics.h"
#include "naive.h"

namespace fsbsed::metrics {
namespace {

using testing::BruteForceMatches;
using testing::NoisyCopies;
using testing::RandomEvents;

TEST(Iou, IntervalArithmetic) {
  EXPECT_DOUBLE_EQ(Iou({1.0, 2.0}, {1.5, 2.5}), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(Iou({1.0, 2.0}, {1.0, 2.0}), 1.0);
  EXPECT_EQ(Iou({1.0, 2.0}, {2.0, 3.0}), 0.0);
  EXPECT_DOUBLE_EQ(Iou({0.0, 4.0}, {1.0, 2.0}), 0.25);
}

TEST(MatchEvents, IdenticalListsMatchCompletely) {
  const std::vector<Event> gt = {{0.5, 1.0}, {2.0, 2.4}, {3.0, 5.0}};
  const Counts c = MatchEvents(gt, gt);
  EXPECT_EQ(c.tp, 3);
  EXPECT_EQ(c.fp, 0);
  EXPECT_EQ(c.fn, 0);
}

TEST(MatchEvents, OneThirdOverlapCounts) {
  const Counts c = MatchEvents({{1.0, 2.0}}, {{1.5, 2.5}});
  EXPECT_EQ(c.tp, 1);
  const Counts strict = MatchEvents({{1.0, 2.0}}, {{1.5, 2.5}}, 0.34);
  EXPECT_EQ(strict.tp, 0);
  EXPECT_EQ(strict.fp, 1);
  EXPECT_EQ(strict.fn, 1);
}

TEST(MatchEvents, GreedyWouldLoseAPair) {
  // The first prediction overlaps truth 1 best (IoU 0.47) but also reaches
  // truth 0 (0.29); the second reaches only truth 1 (0.2). Taking the best
  // pair first leaves one match; the maximum matching finds two.
  const std::vector<Event> pred = {{0.5, 1.7}, {1.7, 2.5}};
  const std::vector<Event> gt = {{0.0, 1.0}, {1.0, 2.0}};
  EXPECT_EQ(MatchEvents(pred, gt, 0.1).tp, 2);
}

TEST(MatchEvents, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> count(0, 8);
  std::uniform_real_distribution<double> iou(0.05, 0.6);
  int total = 0, contested = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::vector<Event> gt = RandomEvents(rng, count(rng));
    const std::vector<Event> pred =
        trial % 4 < 2 ? NoisyCopies(rng, gt) : RandomEvents(rng, count(rng));
    const double min_iou = trial % 2 ? kDefaultMinIou : iou(rng);
    std::vector<bool> used(gt.size(), false);
    const int expected = BruteForceMatches(pred, gt, 0, used, min_iou);
    const Counts c = MatchEvents(pred, gt, min_iou);
    ASSERT_EQ(c.tp, expected) << "trial " << trial;
    total += expected;
    contested += expected < static_cast<int>(std::min(pred.size(), gt.size()));
    EXPECT_EQ(c.fp, static_cast<int>(pred.size()) - expected);
    EXPECT_EQ(c.fn, static_cast<int>(gt.size()) - expected);

    const Counts swapped = MatchEvents(gt, pred, min_iou);
    EXPECT_EQ(swapped.tp, c.tp);
    EXPECT_EQ(swapped.fp, c.fn);
    EXPECT_EQ(swapped.fn, c.fp);
  }
  // The instances must exercise the matcher, not just empty graphs.
  EXPECT_GT(total, 1000);
  EXPECT_GT(contested, 100);
  std::printf("matched pairs %d, instances short of a perfect matching %d\n", total,
              contested);
}

TEST(MatchEvents, ExtraPredictionAddsOneFalsePositive) {
  const std::vector<Event> gt = {{1.0, 2.0}, {4.0, 5.0}};
  std::vector<Event> pred = {{1.1, 2.0}};
  const Counts before = MatchEvents(pred, gt);
  pred.push_back({7.0, 8.0});
  const Counts after = MatchEvents(pred, gt);
  EXPECT_EQ(after.fp, before.fp + 1);
  EXPECT_EQ(after.tp, before.tp);
}

TEST(MaximumMatching, SmallGraphs) {
  EXPECT_EQ(MaximumMatching({}, 0), 0);
  EXPECT_EQ(MaximumMatching({{0, 1}, {0}}, 2), 2);
  EXPECT_EQ(MaximumMatching({{0}, {0}, {0}}, 1), 1);
}

TEST(ScoringTargets, ExcludesTheShots) {
  const data::AnnotationTable table = data::ParseAnnotationsText(
      "Audiofilename,Starttime,Endtime,Q\n"
      "a.wav,1.0,1.2,POS\n"
      "a.wav,2.0,2.2,POS\n"
      "a.wav,3.0,3.2,POS\n"
      "a.wav,4.0,4.2,UNK\n"
      "a.wav,5.0,5.2,POS\n"
      "a.wav,6.0,6.2,POS\n",
      "a.csv");
  const std::vector<Event> targets = ScoringTargets(table, 2);
  ASSERT_EQ(targets.size(), 3u);
  EXPECT_EQ(targets[0], (Event{3.0, 3.2}));
  EXPECT_EQ(targets[2], (Event{6.0, 6.2}));
}

TEST(Scores, Arithmetic) {
  const Scores half = ComputeScores({5, 5, 5});
  EXPECT_EQ(half.precision, 50.0);
  EXPECT_EQ(half.recall, 50.0);
  EXPECT_EQ(half.f1, 50.0);

  const Scores none = ComputeScores({0, 0, 7});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);

  const Scores third = ComputeScores({1, 2, 0});
  EXPECT_EQ(third.precision, 33.33);
  EXPECT_EQ(third.recall, 100.0);
  EXPECT_EQ(third.f1, 50.0);
}

TEST(Aggregate, PoolsCountsPerGroupAndOverall) {
  const EvalReport r = Aggregate({{"b1.wav", "bird", {3, 1, 2}},
                                  {"f1.wav", "frog", {7, 1, 0}}});
  ASSERT_EQ(r.groups.size(), 2u);
  EXPECT_EQ(r.groups[0].group, "bird");
  EXPECT_EQ(r.overall.counts.tp, 10);
  EXPECT_EQ(r.overall.counts.fp, 2);
  EXPECT_EQ(r.overall.counts.fn, 2);
  EXPECT_EQ(r.overall.scores.precision, std::round(100.0 * 10 / 12 * 100) / 100);
  EXPECT_EQ(r.overall.scores.recall, r.overall.scores.precision);
  EXPECT_EQ(r.groups[1].scores.recall, 100.0);

  // A single group's micro score is the per-file formula on pooled counts.
  const EvalReport one = Aggregate({{"a", "g", {2, 1, 0}}, {"b", "g", {1, 0, 3}}});
  EXPECT_EQ(one.groups[0].scores.f1, ComputeScores({3, 1, 3}).f1);
}

TEST(SummarizeTrials, StudentTInterval) {
  const TrialSummary s = SummarizeTrials({50.0, 54.0});
  EXPECT_EQ(s.n, 2);
  EXPECT_DOUBLE_EQ(s.mean, 52.0);
  EXPECT_NEAR(s.stddev, std::sqrt(8.0), 1e-12);
  // t(0.975, 1) = 12.7062047 from tables.
  EXPECT_NEAR(s.half_width, 12.7062047 * std::sqrt(8.0) / std::sqrt(2.0), 1e-5);
  EXPECT_NEAR(s.half_width, 25.41, 0.005);

  const TrialSummary five = SummarizeTrials({1.0, 2.0, 3.0, 4.0, 5.0});
  // t(0.975, 4) = 2.7764451.
  EXPECT_NEAR(five.half_width, 2.7764451 * std::sqrt(2.5) / std::sqrt(5.0), 1e-6);

  EXPECT_EQ(SummarizeTrials({7.0, 7.0, 7.0}).half_width, 0.0);
  EXPECT_THROW(SummarizeTrials({50.0}), UsageError);
}

TEST(Report, CsvAndTable) {
  const EvalReport r = Aggregate({{"b1.wav", "bird", {3, 1, 2}}});
  const auto dir = std::filesystem::temp_directory_path() / "fsbsed_metrics_test";
  std::filesystem::create_directories(dir);
  WriteReportCsv(dir / "report.csv", r);
  WriteFileCsv(dir / "files.csv", r);

  std::ifstream in(dir / "report.csv");
  std::string header, bird, overall;
  std::getline(in, header);
  std::getline(in, bird);
  std::getline(in, overall);
  EXPECT_EQ(header, "group,precision,recall,f1,tp,fp,fn");
  EXPECT_EQ(bird.rfind("bird,", 0), 0u);
  EXPECT_EQ(overall.rfind("overall,", 0), 0u);

  std::ifstream files(dir / "files.csv");
  std::getline(files, header);
  EXPECT_EQ(header, "file,group,tp,fp,fn");

  const std::string table = FormatReportTable(r);
  EXPECT_NE(table.find("overall"), std::string::npos);
  EXPECT_NE(table.find("bird"), std::string::npos);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace fsbsed::metrics
