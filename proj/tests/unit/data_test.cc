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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "fsbsed/annotations.h"
#include "fsbsed/dataset.h"
#include "fsbsed/episode.h"
#include "fsbsed/seed.h"
#include "fsbsed/segments.h"
#include "synthetic.h"

namespace fsbsed::data {
namespace {

std::shared_ptr<const dsp::FeatureMatrix> Frames(int frames, int dim = 4, double hop = 0.01) {
  auto f = std::make_shared<dsp::FeatureMatrix>();
  f->values.resize(frames, dim);
  for (int t = 0; t < frames; ++t) {
    for (int d = 0; d < dim; ++d) f->values(t, d) = t * 100 + d;
  }
  f->frame_hop_seconds = hop;
  return f;
}

TEST(Annotations, SingleClassRow) {
  const AnnotationTable t = ParseAnnotationsText(
      "Audiofilename,Starttime,Endtime,Q\na.wav,1.00,1.50,POS\n", "a.csv");
  ASSERT_EQ(t.events.size(), 1u);
  EXPECT_EQ(t.file, "a.wav");
  EXPECT_EQ(t.events[0].onset, 1.0);
  EXPECT_EQ(t.events[0].offset, 1.5);
  EXPECT_EQ(t.events[0].class_name, "Q");
  EXPECT_EQ(t.events[0].value, Label::kPos);
  EXPECT_EQ(t.class_set, std::vector<std::string>{"Q"});
}

TEST(Annotations, ReversedIntervalNamesRow) {
  try {
    ParseAnnotationsText(
        "Audiofilename,Starttime,Endtime,Q\na.wav,0.5,0.7,POS\na.wav,2.0,1.0,POS\n", "a.csv");
    FAIL();
  } catch (const AnnotationError& e) {
    EXPECT_EQ(e.row(), 2);
    EXPECT_NE(std::string(e.what()).find("a.csv"), std::string::npos);
  }
}

TEST(Annotations, MultiClassExpandsPerColumn) {
  const AnnotationTable t = ParseAnnotationsText(
      "Audiofilename,Starttime,Endtime,A,B,C\nx.wav,3.0,4.0,POS,UNK,NEG\n"
      "x.wav,1.0,2.0,NEG,POS,NEG\n",
      "x.csv");
  std::map<std::pair<std::string, Label>, int> n;
  for (const auto& e : t.events) ++n[{e.class_name, e.value}];
  EXPECT_EQ((n[{"A", Label::kPos}]), 1);
  EXPECT_EQ((n[{"B", Label::kUnk}]), 1);
  EXPECT_EQ((n[{"C", Label::kNeg}]), 2);
  const auto pos = t.Positives();
  ASSERT_EQ(pos.size(), 2u);
  EXPECT_EQ(pos[0].class_name, "B");  // sorted by onset
  EXPECT_EQ(t.ClassIndex("C"), 2);
  EXPECT_EQ(t.ClassIndex("Z"), -1);
}

TEST(Annotations, BadInputsAreDataErrors) {
  EXPECT_THROW(ParseAnnotationsText("", "e.csv"), AnnotationError);
  EXPECT_THROW(ParseAnnotationsText("File,Start,End,Q\n", "h.csv"), AnnotationError);
  EXPECT_THROW(ParseAnnotationsText("Audiofilename,Starttime,Endtime,Q\na.wav,x,1,POS\n", "n.csv"),
               AnnotationError);
  EXPECT_THROW(ParseAnnotationsText("Audiofilename,Starttime,Endtime,Q\na.wav,0,1,MAYBE\n", "v.csv"),
               AnnotationError);
  EXPECT_THROW(ParseAnnotationsText("Audiofilename,Starttime,Endtime,Q\na.wav,0,1\n", "c.csv"),
               AnnotationError);
  const AnnotationTable t = ParseAnnotationsText(
      "Audiofilename,Starttime,Endtime,Q\na.wav,0,12,POS\n", "d.csv");
  EXPECT_THROW(t.CheckWithin(10.0, 0.05), DataError);
  EXPECT_NO_THROW(t.CheckWithin(11.99, 0.05));
}

TEST(Segments, FrameSecondsRoundTrip) {
  const double hop = 256.0 / 22050.0;
  for (double s = 0.0; s < 30.0; s += 0.137) {
    EXPECT_LE(std::abs(FrameToSeconds(SecondsToFrame(s, hop), hop) - s), hop);
  }
}

TEST(Segments, TilingArithmetic) {
  const int T = 17;
  EXPECT_EQ(TileSpan({10, T}, T).size(), 1u);
  EXPECT_EQ(TileSpan({0, 32}, 16).size(), 3u);  // 2T frames, hop T/2
  EXPECT_EQ(TileSpan({0, 32}, 16)[2].start, 16);
  const auto tail = TileSpan({3, 2 * T}, T);     // hop 8 leaves one frame over
  ASSERT_EQ(tail.size(), 4u);
  EXPECT_EQ(tail.back().end(), 3 + 2 * T);
  const auto shortspan = TileSpan({5, 6}, T);
  ASSERT_EQ(shortspan.size(), 1u);
  EXPECT_EQ(shortspan[0].length, 6);
  EXPECT_TRUE(TileSpan({0, 0}, T).empty());
}

TEST(Segments, PatchesFromAnnotations) {
  auto feats = Frames(200);
  // Event covering exactly one patch and one 2T event, T = 16 frames of 10 ms.
  const AnnotationTable t = ParseAnnotationsText(
      "Audiofilename,Starttime,Endtime,Q\na.wav,0.20,0.36,POS\na.wav,1.00,1.32,POS\n"
      "a.wav,1.60,1.70,UNK\n",
      "a.csv");
  const SegmentPool pool = ExtractPatches(feats, t, 16);
  std::map<int, int> per_event;
  for (const PatchRef& p : pool.patches()) {
    if (p.polarity == Polarity::kPositive) ++per_event[p.event_id];
  }
  EXPECT_EQ(per_event[0], 1);
  EXPECT_EQ(per_event[1], 3);
  const std::vector<bool> mask = LabelledMask(*feats, t);
  for (const PatchRef& p : pool.patches()) {
    if (p.polarity != Polarity::kNegative) continue;
    EXPECT_EQ(p.class_index, kBackgroundClass);
    for (int f = p.window.start; f < p.window.end(); ++f) ASSERT_FALSE(mask[f]) << f;
  }
  // UNK frames are in neither pool.
  for (int f = 160; f < 170; ++f) EXPECT_TRUE(mask[f]);
}

TEST(Segments, NoPositivesMeansBackgroundEverywhere) {
  auto feats = Frames(100);
  const AnnotationTable t = ParseAnnotationsText(
      "Audiofilename,Starttime,Endtime,Q\na.wav,0.1,0.2,NEG\n", "a.csv");
  const SegmentPool pool = ExtractPatches(feats, t, 17);
  std::vector<bool> covered(100, false);
  for (const PatchRef& p : pool.patches()) {
    ASSERT_EQ(p.polarity, Polarity::kNegative);
    for (int f = p.window.start; f < p.window.end(); ++f) covered[f] = true;
  }
  for (bool c : covered) EXPECT_TRUE(c);
}

TEST(Segments, ShortPatchesRepeatCyclically) {
  auto feats = Frames(50, 2);
  SegmentPool pool(5, 2);
  pool.AddSource(feats);
  pool.Add({0, {10, 2}, 0, Polarity::kPositive, 0});
  const dsp::Matrix m = pool.Materialize(0);
  ASSERT_EQ(m.rows(), 5);
  for (int r = 0; r < 5; ++r) EXPECT_EQ(m(r, 1), feats->values(10 + r % 2, 1));
  float fm[10];
  pool.WriteFeatureMajor(0, fm);
  for (int d = 0; d < 2; ++d) {
    for (int r = 0; r < 5; ++r) EXPECT_EQ(fm[d * 5 + r], m(r, d));
  }
}

ClassPools UniformPools(int classes, int per_class) {
  ClassPools p;
  p.pool = SegmentPool(1, 1);
  p.pool.AddSource(Frames(classes * per_class * 2 + 1, 1));
  for (int c = 0; c < classes; ++c) {
    p.class_names.push_back("c" + std::to_string(c));
    p.positives.emplace_back();
    p.negatives.emplace_back();
    for (int i = 0; i < per_class; ++i) {
      p.positives.back().push_back(p.pool.Add({0, {c * per_class + i, 1}, c, Polarity::kPositive, -1}));
      p.negatives.back().push_back(p.pool.Add({0, {0, 1}, kBackgroundClass, Polarity::kNegative, -1}));
    }
  }
  return p;
}

TEST(Episode, CapacityErrorWhenAClassIsTooSmall) {
  const ClassPools p = UniformPools(1, 1);
  EXPECT_THROW(SampleEpisode(p, {1, 1, 1}, 0), CapacityError);
  EXPECT_THROW(SampleEpisode(UniformPools(3, 10), {4, 5, 5}, 0), CapacityError);
  EXPECT_THROW(SampleEpisode(UniformPools(3, 10), {0, 5, 5}, 0), UsageError);
}

TEST(Episode, DeterministicAndWellFormed) {
  const ClassPools p = UniformPools(6, 12);
  const EpisodeShape shape{3, 5, 4};
  const Episode a = SampleEpisode(p, shape, 42);
  const Episode b = SampleEpisode(p, shape, 42);
  ASSERT_EQ(a.classes, b.classes);
  ASSERT_EQ(a.support.size(), 15u);
  ASSERT_EQ(a.query.size(), 12u);
  ASSERT_EQ(a.negative_support.size(), 15u);
  for (size_t i = 0; i < a.support.size(); ++i) EXPECT_EQ(a.support[i].patch, b.support[i].patch);
  EXPECT_EQ(std::set<int>(a.classes.begin(), a.classes.end()).size(), 3u);
  for (int n = 0; n < 3; ++n) {
    std::set<size_t> seen;
    for (int k = 0; k < 5; ++k) {
      EXPECT_EQ(a.support[n * 5 + k].label, n);
      seen.insert(a.support[n * 5 + k].patch);
    }
    for (int q = 0; q < 4; ++q) {
      EXPECT_EQ(a.query[n * 4 + q].label, n);
      seen.insert(a.query[n * 4 + q].patch);
    }
    EXPECT_EQ(seen.size(), 9u);  // no patch is both support and query
    for (size_t s : seen) EXPECT_EQ(p.pool[s].class_index, a.classes[n]);
  }
}

TEST(Episode, ClassFrequencyIsUniform) {
  const ClassPools p = UniformPools(20, 10);
  const int n_way = 5;
  const int episodes = 10000;
  std::vector<int> count(20, 0);
  for (int e = 0; e < episodes; ++e) {
    for (int c : SampleEpisode(p, {n_way, 2, 2}, DeriveSeed(9, e)).classes) ++count[c];
  }
  const double prob = static_cast<double>(n_way) / 20.0;
  const double mean = episodes * prob;
  const double sigma = std::sqrt(episodes * prob * (1.0 - prob));
  for (int c = 0; c < 20; ++c) EXPECT_LE(std::abs(count[c] - mean), 3.0 * sigma) << c;
}

TEST(Dataset, ScanLoadAndSplit) {
  const auto root = std::filesystem::temp_directory_path() / "fsbsed_data_test";
  std::filesystem::remove_all(root);
  testing::CorpusSpec spec;
  spec.train_files = 3;
  spec.eval_files = 3;
  spec.train_seconds = 8.0;
  spec.eval_seconds = 10.0;
  spec.train_events_per_species = 3;
  spec.eval_target_events = 7;
  spec.eval_distractor_events = 1;
  const testing::CorpusPaths paths = testing::WriteCorpus(root, spec);

  const auto eval = ScanDatasetRoot(paths.eval_root);
  ASSERT_EQ(eval.size(), 3u);
  EXPECT_EQ(eval[0].id(), "chirp/eval_01.wav");
  EXPECT_EQ(eval[0].subset, "chirp");
  EXPECT_THROW(ScanDatasetRoot(root / "missing"), DataError);

  const auto train = ScanDatasetRoot(paths.train_root);
  dsp::FeatureConfig cfg;
  const auto recs = LoadRecordings(train, cfg, true, 2);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_NEAR(recs[0].duration_seconds, 8.0, 1e-6);
  EXPECT_EQ(recs[0].features->dim(), 128);
  EXPECT_NEAR(recs[0].features->values.col(5).mean(), 0.0, 1e-9);

  const CorpusPools pools = BuildClassPools(recs, 17, 0.3, 5);
  EXPECT_EQ(pools.train.class_names, pools.validation.class_names);
  ASSERT_EQ(pools.train.num_classes(), 3);
  // Whole events go to one side: no (source, event) pair appears on both.
  std::set<std::pair<const dsp::FeatureMatrix*, int>> train_events;
  for (const PatchRef& p : pools.train.pool.patches()) {
    if (p.polarity == Polarity::kPositive) {
      train_events.insert({&pools.train.pool.source(p.source), p.event_id});
    }
  }
  size_t validation_events = 0;
  for (const PatchRef& p : pools.validation.pool.patches()) {
    if (p.polarity != Polarity::kPositive) continue;
    ++validation_events;
    EXPECT_FALSE(train_events.count({&pools.validation.pool.source(p.source), p.event_id}));
  }
  EXPECT_GT(validation_events, 0u);
  const CorpusPools again = BuildClassPools(recs, 17, 0.3, 5);
  EXPECT_EQ(again.train.pool.size(), pools.train.pool.size());
  std::filesystem::remove_all(root);
}

TEST(Seed, StableAndSensitive) {
  EXPECT_EQ(DeriveSeed(1, "a", 2), DeriveSeed(1, "a", 2));
  EXPECT_NE(DeriveSeed(1, "a", 2), DeriveSeed(1, "a", 3));
  EXPECT_NE(DeriveSeed(1, "ab"), DeriveSeed(1, "a", "b"));
  Rng rng(3);
  const auto s = SampleWithoutReplacement(rng, 10, 10);
  EXPECT_EQ(std::set<size_t>(s.begin(), s.end()).size(), 10u);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(UniformBelow(rng, 7), 7u);
}

}  // namespace
}  // namespace fsbsed::data
