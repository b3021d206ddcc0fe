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

#include "fsbsed/inference.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "fsbsed/error.h"
#include "fsbsed/optimizer.h"
#include "fsbsed/seed.h"
#include "fsbsed/trainer.h"

namespace fsbsed::inference {
namespace {

using protonet::Matrix;
using protonet::Vector;

double ParseDouble(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw DataError(fmt::format("{}: '{}' is not a number", where, s));
  }
  return v;
}

std::vector<std::string_view> SplitCsv(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.remove_suffix(1);
    while (!f.empty() && f.front() == ' ') f.remove_prefix(1);
  }
  return out;
}

}  // namespace

void InferenceConfig::Validate() const {
  if (n_shots < 1) throw UsageError("inference: n_shots must be >= 1");
  if (neg_segments_per_set < 1) {
    throw UsageError("inference: neg_segments_per_set must be >= 1");
  }
  if (n_negative_sets < 1) throw UsageError("inference: n_negative_sets must be >= 1");
  if (!(prob_threshold >= 0.0 && prob_threshold <= 1.0)) {
    throw UsageError("inference: prob_threshold must lie in [0, 1]");
  }
  if (!(min_event_frac >= 0.0)) throw UsageError("inference: min_event_frac must be >= 0");
  if (patch_frames < 1) throw UsageError("inference: patch_frames must be >= 1");
  if (min_window_frames < 1 || max_window_frames < min_window_frames) {
    throw UsageError("inference: need 1 <= min_window_frames <= max_window_frames");
  }
  if (adapt_steps < 0) throw UsageError("inference: adapt_steps must be >= 0");
  if (!(adapt_lr > 0.0)) throw UsageError("inference: adapt_lr must be > 0");
  if (adapt_negatives < 1) throw UsageError("inference: adapt_negatives must be >= 1");
}

std::vector<Event> MergeEvents(std::vector<Event> events, double min_duration) {
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.onset < b.onset || (a.onset == b.onset && a.offset < b.offset);
  });
  std::vector<Event> merged;
  for (const Event& e : events) {
    if (!(e.offset > e.onset)) continue;
    if (!merged.empty() && e.onset <= merged.back().offset) {
      merged.back().offset = std::max(merged.back().offset, e.offset);
    } else {
      merged.push_back(e);
    }
  }
  std::vector<Event> out;
  for (const Event& e : merged) {
    if (e.offset - e.onset >= min_duration) out.push_back(e);
  }
  return out;
}

std::vector<double> EnsembleAverage(const std::vector<std::vector<double>>& members) {
  if (members.empty()) throw UsageError("ensemble: no members");
  std::vector<double> out(members[0].size(), 0.0);
  for (const auto& m : members) {
    if (m.size() != out.size()) throw UsageError("ensemble: member length mismatch");
    for (size_t i = 0; i < m.size(); ++i) out[i] += m[i];
  }
  for (double& v : out) v /= static_cast<double>(members.size());
  return out;
}

Vector PreparedFile::positive_prototype() const {
  return protonet::ComputePrototype(shots);
}

std::vector<data::AnnotatedEvent> SelectShots(const data::AnnotationTable& table,
                                              const InferenceConfig& cfg,
                                              std::string* target_class) {
  std::string target = cfg.target_class;
  if (target.empty()) {
    if (table.class_set.size() != 1) {
      throw DataError(fmt::format(
          "{}: {} class columns; set target_class to choose one", table.file,
          table.class_set.size()));
    }
    target = table.class_set[0];
  } else if (table.ClassIndex(target) < 0) {
    throw DataError(fmt::format("{}: no class column '{}'", table.file, target));
  }
  std::vector<data::AnnotatedEvent> pos = table.Select(target, data::Label::kPos);
  if (static_cast<int>(pos.size()) < cfg.n_shots) {
    throw DataError(fmt::format("{}: {} POS events for '{}', need {} shots",
                                table.file, pos.size(), target, cfg.n_shots));
  }
  pos.resize(cfg.n_shots);
  if (target_class) *target_class = target;
  return pos;
}

data::AnnotationTable VisibleAnnotations(const data::AnnotationTable& table,
                                         const InferenceConfig& cfg) {
  data::AnnotationTable out;
  out.file = table.file;
  std::string target;
  out.events = SelectShots(table, cfg, &target);
  out.class_set = {target};
  const double horizon = out.events.back().offset;
  for (const data::AnnotatedEvent& e : table.Select(target, data::Label::kUnk)) {
    if (e.offset <= horizon) out.events.push_back(e);
  }
  return out;
}

PreparedFile PrepareFile(const nn::EmbeddingNetwork<float>& net,
                         std::shared_ptr<const dsp::FeatureMatrix> features,
                         const data::AnnotationTable& table,
                         const std::string& file_id, const InferenceConfig& cfg) {
  cfg.Validate();
  PreparedFile out;
  out.file = file_id;
  const std::vector<data::AnnotatedEvent> shots =
      SelectShots(table, cfg, &out.target_class);
  const double hop = features->frame_hop_seconds;
  const int total = features->frames();
  out.hop_seconds = hop;

  data::SegmentPool pool(cfg.patch_frames, features->dim());
  pool.AddSource(features);

  // Shot patches, grouped per shot.
  std::vector<std::pair<size_t, size_t>> shot_ranges;
  double shot_seconds = 0.0;
  int shot_frames = 0;
  for (const auto& e : shots) {
    const data::FrameSpan span = data::EventFrames(e.onset, e.offset, hop, total);
    if (span.length == 0) {
      throw DataError(fmt::format("{}: shot at {:.3f}s lies past the audio",
                                  file_id, e.onset));
    }
    const size_t begin = pool.size();
    for (const data::FrameSpan& w : data::TileSpan(span, cfg.patch_frames)) {
      pool.Add({0, w, 0, data::Polarity::kPositive, -1});
    }
    shot_ranges.emplace_back(begin, pool.size());
    shot_seconds += e.offset - e.onset;
    shot_frames += span.length;
  }
  out.mean_shot_seconds = shot_seconds / shots.size();
  out.query_start_seconds = shots.back().offset;

  // Query windows after the last shot, each tiled into patches.
  out.window_frames = std::clamp(
      static_cast<int>(std::lround(static_cast<double>(shot_frames) / shots.size())),
      cfg.min_window_frames, cfg.max_window_frames);
  const int win = out.window_frames;
  const int win_hop = std::max(1, win / 2);
  const int first = std::clamp(data::SecondsToFrame(out.query_start_seconds, hop), 0, total);
  for (int s = first; s < total; s += win_hop) {
    const int len = std::min(win, total - s);
    out.windows.push_back({s, len});
    if (s + win >= total) break;
  }
  std::map<std::pair<int, int>, size_t> patch_of;  // (start, length) -> pool index
  std::vector<std::vector<size_t>> window_patches;
  for (const data::FrameSpan& w : out.windows) {
    std::vector<size_t> ids;
    for (const data::FrameSpan& p : data::TileSpan(w, cfg.patch_frames)) {
      auto [it, inserted] = patch_of.try_emplace({p.start, p.length}, pool.size());
      if (inserted) pool.Add({0, p, data::kBackgroundClass, data::Polarity::kNegative, -1});
      ids.push_back(it->second);
    }
    window_patches.push_back(std::move(ids));
  }

  // Background: the whole file minus the visible annotations.
  const data::SegmentPool bg =
      data::ExtractPatches(features, VisibleAnnotations(table, cfg), cfg.patch_frames);
  std::vector<size_t> bg_ids;
  for (size_t i : bg.Select(data::kBackgroundClass, data::Polarity::kNegative)) {
    auto [it, inserted] =
        patch_of.try_emplace({bg[i].window.start, bg[i].window.length}, pool.size());
    if (inserted) pool.Add({0, bg[i].window, data::kBackgroundClass,
                            data::Polarity::kNegative, -1});
    bg_ids.push_back(it->second);
  }
  if (bg_ids.empty()) {
    throw DataError(fmt::format("{}: no background segments outside POS/UNK events",
                                file_id));
  }

  std::vector<size_t> all(pool.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  const Matrix emb = protonet::EmbedPatches(net, pool, all, cfg.threads);

  out.shots.resize(static_cast<Eigen::Index>(shot_ranges.size()), emb.cols());
  for (size_t s = 0; s < shot_ranges.size(); ++s) {
    const auto [b, e] = shot_ranges[s];
    out.shots.row(s) = emb.middleRows(b, e - b).colwise().mean();
  }
  out.queries.resize(static_cast<Eigen::Index>(out.windows.size()), emb.cols());
  for (size_t w = 0; w < window_patches.size(); ++w) {
    Vector acc = Vector::Zero(emb.cols());
    for (size_t id : window_patches[w]) acc += emb.row(id);
    out.queries.row(w) = acc / static_cast<double>(window_patches[w].size());
  }
  out.negatives.resize(static_cast<Eigen::Index>(bg_ids.size()), emb.cols());
  for (size_t i = 0; i < bg_ids.size(); ++i) out.negatives.row(i) = emb.row(bg_ids[i]);
  return out;
}

uint64_t NegativeSetSeed(uint64_t rng_seed, const std::string& file, int count,
                         int set_index) {
  return DeriveSeed(rng_seed, "negatives", std::string_view(file),
                    static_cast<uint64_t>(count), static_cast<uint64_t>(set_index));
}

std::vector<double> WindowProbabilities(const PreparedFile& prepared,
                                        const InferenceConfig& cfg) {
  cfg.Validate();
  const Eigen::Index pool = prepared.negatives.rows();
  if (pool == 0) throw DataError(prepared.file + ": empty negative pool");
  std::vector<Vector> negative_protos;
  if (!cfg.negative_hard_sampling) {
    negative_protos.push_back(protonet::ComputePrototype(prepared.negatives));
  } else {
    const size_t count = std::min<size_t>(cfg.neg_segments_per_set, pool);
    for (int s = 0; s < cfg.n_negative_sets; ++s) {
      Rng rng(NegativeSetSeed(cfg.rng_seed, prepared.file, cfg.neg_segments_per_set, s));
      Vector acc = Vector::Zero(prepared.negatives.cols());
      for (size_t i : SampleWithoutReplacement(rng, pool, count)) {
        acc += prepared.negatives.row(static_cast<Eigen::Index>(i));
      }
      negative_protos.push_back(acc / static_cast<double>(count));
    }
  }
  const Vector positive = prepared.positive_prototype();
  std::vector<std::vector<double>> members;
  for (const Vector& neg : negative_protos) {
    Matrix pos_m = positive;
    Matrix neg_m = neg;
    std::vector<double> probs(prepared.queries.rows());
    for (Eigen::Index w = 0; w < prepared.queries.rows(); ++w) {
      probs[w] = protonet::Classify(prepared.queries.row(w), pos_m, neg_m, cfg.distance)[0];
    }
    members.push_back(std::move(probs));
  }
  return EnsembleAverage(members);
}

EventList PostProcess(const PreparedFile& prepared,
                      const std::vector<double>& probabilities,
                      const InferenceConfig& cfg) {
  if (probabilities.size() != prepared.windows.size()) {
    throw UsageError("post-process: one probability per window required");
  }
  std::vector<Event> raw;
  for (size_t w = 0; w < probabilities.size(); ++w) {
    if (!(probabilities[w] > cfg.prob_threshold)) continue;
    const data::FrameSpan& span = prepared.windows[w];
    const double onset = std::max(prepared.query_start_seconds,
                                  span.start * prepared.hop_seconds);
    raw.push_back({onset, span.end() * prepared.hop_seconds});
  }
  EventList out;
  out.file = prepared.file;
  out.events = MergeEvents(std::move(raw), cfg.min_event_frac * prepared.mean_shot_seconds);
  return out;
}

nn::EmbeddingNetwork<float> TransductiveAdapt(
    const nn::EmbeddingNetwork<float>& net,
    std::shared_ptr<const dsp::FeatureMatrix> features,
    const data::AnnotationTable& table, const std::string& file_id,
    const InferenceConfig& cfg) {
  cfg.Validate();
  nn::EmbeddingNetwork<float> adapted = net;
  if (cfg.adapt_steps == 0) return adapted;
  const std::vector<data::AnnotatedEvent> shots = SelectShots(table, cfg);
  const double hop = features->frame_hop_seconds;
  const int total = features->frames();

  data::ClassPools pools;
  pools.pool = data::SegmentPool(cfg.patch_frames, features->dim());
  pools.pool.AddSource(features);
  std::vector<size_t> positives;
  for (const auto& e : shots) {
    for (const data::FrameSpan& w :
         data::TileSpan(data::EventFrames(e.onset, e.offset, hop, total), cfg.patch_frames)) {
      positives.push_back(pools.pool.Add({0, w, 0, data::Polarity::kPositive, -1}));
    }
  }
  // Background before the last shot is known to be negative; later
  // background may hide unlabelled target events, so it is only used when
  // the labelled stretch is too short.
  const data::SegmentPool bg =
      data::ExtractPatches(features, VisibleAnnotations(table, cfg), cfg.patch_frames);
  const int horizon = data::SecondsToFrame(shots.back().offset, hop);
  std::vector<size_t> labelled_bg;
  std::vector<size_t> all_bg;
  for (size_t i : bg.Select(data::kBackgroundClass, data::Polarity::kNegative)) {
    all_bg.push_back(i);
    if (bg[i].window.end() <= horizon) labelled_bg.push_back(i);
  }
  std::vector<size_t> background;
  for (size_t i : labelled_bg.size() >= 2 ? labelled_bg : all_bg) {
    background.push_back(pools.pool.Add(bg[i]));
  }
  if (positives.empty() || background.size() < 2) {
    throw DataError(fmt::format("{}: not enough patches to adapt", file_id));
  }

  nn::AdamConfig adam;
  adam.base_lr = cfg.adapt_lr;
  adam.decay_gamma = 1.0;
  nn::Adam<float> opt(adam);
  Rng rng(DeriveSeed(cfg.rng_seed, "adapt", std::string_view(file_id)));
  const size_t n_neg = std::min<size_t>(cfg.adapt_negatives, background.size() / 2);
  for (int step = 0; step < cfg.adapt_steps; ++step) {
    // Shots split into support and positive queries; two disjoint draws of
    // background give the negative support and the negative queries.
    std::vector<size_t> order = SampleWithoutReplacement(rng, positives.size(),
                                                         positives.size());
    const size_t n_sup = positives.size() == 1 ? 1 : (positives.size() + 1) / 2;
    data::Episode ep;
    ep.n_way = 1;
    ep.classes = {0};
    for (size_t i = 0; i < n_sup; ++i) ep.support.push_back({positives[order[i]], 0});
    for (size_t i = n_sup; i < order.size(); ++i) ep.query.push_back({positives[order[i]], 0});
    if (ep.query.empty()) ep.query = ep.support;
    const std::vector<size_t> draw =
        SampleWithoutReplacement(rng, background.size(), 2 * n_neg);
    for (size_t i = 0; i < n_neg; ++i) {
      ep.negative_support.push_back({background[draw[i]], 0});
      ep.query.push_back({background[draw[n_neg + i]], protonet::kNoClass});
    }
    ep.k_shot = static_cast<int>(ep.support.size());
    ep.q_query = static_cast<int>(ep.query.size());
    protonet::TrainStep(adapted, opt, pools, ep, cfg.distance, 0);
  }
  return adapted;
}

EventList DetectFile(const nn::EmbeddingNetwork<float>& net,
                     std::shared_ptr<const dsp::FeatureMatrix> features,
                     const data::AnnotationTable& table,
                     const std::string& file_id, const InferenceConfig& cfg) {
  PreparedFile prepared;
  if (cfg.transductive) {
    const nn::EmbeddingNetwork<float> adapted =
        TransductiveAdapt(net, features, table, file_id, cfg);
    prepared = PrepareFile(adapted, features, table, file_id, cfg);
  } else {
    prepared = PrepareFile(net, features, table, file_id, cfg);
  }
  return PostProcess(prepared, WindowProbabilities(prepared, cfg), cfg);
}

void WritePredictions(const std::filesystem::path& path,
                      const std::vector<EventList>& lists) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("{}: cannot write predictions", path.string()));
  out << "Audiofilename,Starttime,Endtime\n";
  for (const EventList& l : lists) {
    for (const Event& e : l.events) {
      out << fmt::format("{},{:.3f},{:.3f}\n", l.file, e.onset, e.offset);
    }
  }
}

std::vector<EventList> ReadPredictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("{}: cannot open predictions", path.string()));
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(fmt::format("{}: empty predictions file", path.string()));
  }
  const auto header = SplitCsv(line);
  if (header.size() != 3 || header[0] != "Audiofilename" || header[1] != "Starttime" ||
      header[2] != "Endtime") {
    throw DataError(fmt::format(
        "{}: header must be Audiofilename,Starttime,Endtime", path.string()));
  }
  std::vector<EventList> out;
  std::map<std::string, size_t> index;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = SplitCsv(line);
    const std::string where = fmt::format("{}: row {}", path.string(), row);
    if (f.size() != 3) throw DataError(where + ": expected 3 columns");
    const Event e{ParseDouble(f[1], where), ParseDouble(f[2], where)};
    if (!(e.onset < e.offset)) throw DataError(where + ": Starttime >= Endtime");
    auto [it, inserted] = index.try_emplace(std::string(f[0]), out.size());
    if (inserted) out.push_back({std::string(f[0]), {}});
    out[it->second].events.push_back(e);
  }
  for (EventList& l : out) l.events = MergeEvents(std::move(l.events), 0.0);
  return out;
}

}  // namespace fsbsed::inference
