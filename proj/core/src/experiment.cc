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

#include "fsbsed/experiment.h"

#include <charconv>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "config_json.h"
#include "fsbsed/checkpoint.h"
#include "fsbsed/error.h"
#include "fsbsed/parallel.h"
#include "fsbsed/seed.h"

namespace fsbsed::experiment {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kDoneMarker = "DONE";
constexpr const char* kRowsHeader =
    "run_id,trial,seed,point,config,precision,recall,f1,tp,fp,fn";

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T ParseNumber(const std::string& s, const std::string& where) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError(fmt::format("{}: '{}' is not a number", where, s));
  }
  return v;
}

// Corpora are loaded once per (root, feature settings).
class CorpusCache {
 public:
  std::shared_ptr<const std::vector<data::Recording>> Get(const std::string& root,
                                                          const Settings& s) {
    const std::string key = root + "|" + CheckpointMetadata(s);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto corpus = std::make_shared<const std::vector<data::Recording>>(LoadCorpus(root, s));
    cache_.emplace(key, corpus);
    return corpus;
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const std::vector<data::Recording>>> cache_;
};

// Inference settings that change the embeddings of a file.
std::string PreparationKey(const inference::InferenceConfig& c) {
  return fmt::format("{}|{}|{}|{}|{}|{}|{}|{}|{}", c.n_shots, c.patch_frames,
                     c.min_window_frames, c.max_window_frames, c.transductive,
                     c.adapt_steps, c.adapt_lr, c.adapt_negatives, c.target_class);
}

std::vector<TrialRow> RunTrial(const ExperimentPlan& plan, const RunSpec& run,
                               int trial, CorpusCache& cache) {
  Settings s;
  ApplyJsonText(s, plan.base, "plan base");
  ApplyJsonText(s, run.overrides, "run " + run.id);
  s.seed = TrialSeed(plan.base_seed, run.id, trial);
  s.Validate();
  const fs::path dir = fs::path(plan.output_dir) / run.id / std::to_string(trial);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.json");
    cfg << SettingsToJson(s) << "\n";
  }

  const fs::path ckpt_path = dir / "model.ckpt";
  nn::EmbeddingNetwork<float> net;
  if (fs::exists(ckpt_path)) {
    nn::Checkpoint ck = nn::LoadCheckpoint(ckpt_path);
    if (ck.metadata != CheckpointMetadata(s)) {
      throw DataError(fmt::format(
          "{}: checkpoint was trained with different feature settings",
          ckpt_path.string()));
    }
    net = std::move(ck.network);
  } else {
    const auto train = cache.Get(s.train_root, s);
    protonet::TrainResult tr = TrainFromSettings(s, *train);
    protonet::WriteTrainingLog(dir / "training_log.csv", tr.log);
    nn::SaveCheckpoint(ckpt_path, tr.network, CheckpointMetadata(s));
    net = std::move(tr.network);
  }

  const auto eval = cache.Get(s.eval_root, s);
  const std::vector<std::string> names = PredictionNames(*eval);
  const std::vector<SweepPoint> points = ExpandGrid(run.sweep);
  std::map<std::string, std::vector<inference::PreparedFile>> prepared;
  std::vector<TrialRow> rows;
  for (size_t p = 0; p < points.size(); ++p) {
    Settings sp = s;
    for (const auto& [key, value] : points[p]) ApplyOverride(sp, key, value);
    sp.Validate();
    inference::InferenceConfig cfg = InferenceConfigOf(sp);
    cfg.rng_seed = TrialNegativeSeed(plan.base_seed, trial);

    const std::string pkey = PreparationKey(cfg);
    if (!prepared.count(pkey)) {
      std::vector<inference::PreparedFile> files(eval->size());
      inference::InferenceConfig inner = cfg;
      inner.threads = 1;
      ParallelFor(eval->size(), sp.threads, [&](size_t i) {
        const data::Recording& r = (*eval)[i];
        if (cfg.transductive) {
          const auto adapted =
              inference::TransductiveAdapt(net, r.features, r.table, names[i], inner);
          files[i] = inference::PrepareFile(adapted, r.features, r.table, names[i], inner);
        } else {
          files[i] = inference::PrepareFile(net, r.features, r.table, names[i], inner);
        }
      });
      prepared.emplace(pkey, std::move(files));
    }
    std::vector<inference::EventList> predictions;
    for (const inference::PreparedFile& f : prepared.at(pkey)) {
      predictions.push_back(
          inference::PostProcess(f, inference::WindowProbabilities(f, cfg), cfg));
    }
    const metrics::EvalReport report = EvaluateAll(predictions, *eval, sp);
    const fs::path pdir = dir / fmt::format("point{}", p);
    inference::WritePredictions(pdir / "predictions.csv", predictions);
    metrics::WriteReportCsv(pdir / "report.csv", report);
    metrics::WriteFileCsv(pdir / "files.csv", report);
    rows.push_back({run.id, trial, s.seed, static_cast<int>(p), PointLabel(points[p]),
                    report.overall.scores, report.overall.counts});
  }
  WriteTrialRows(dir / "results.csv", rows);
  std::ofstream(dir / kDoneMarker) << "ok\n";
  return rows;
}

}  // namespace

std::vector<data::Recording> LoadCorpus(const std::string& root, const Settings& s) {
  if (root.empty()) throw UsageError("dataset root is not set");
  return data::LoadRecordings(data::ScanDatasetRoot(root), s.features, s.standardize,
                              s.threads);
}

protonet::TrainResult TrainFromSettings(const Settings& s,
                                        const std::vector<data::Recording>& recordings) {
  const data::CorpusPools pools = data::BuildClassPools(
      recordings, s.patch_frames, s.validation_fraction, DeriveSeed(s.seed, "split"));
  return protonet::TrainProtoNet(pools, TrainConfigOf(s));
}

std::vector<std::string> PredictionNames(const std::vector<data::Recording>& recordings) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (const data::Recording& r : recordings) {
    names.push_back(r.entry.wav.filename().string());
    if (!seen.insert(names.back()).second) {
      throw DataError(fmt::format("two recordings are named '{}'", names.back()));
    }
  }
  return names;
}

std::vector<inference::EventList> DetectAll(
    const nn::EmbeddingNetwork<float>& net,
    const std::vector<data::Recording>& recordings,
    const inference::InferenceConfig& cfg) {
  const std::vector<std::string> names = PredictionNames(recordings);
  std::vector<inference::EventList> out(recordings.size());
  inference::InferenceConfig inner = cfg;
  inner.threads = 1;
  ParallelFor(recordings.size(), cfg.threads, [&](size_t i) {
    const data::Recording& r = recordings[i];
    out[i] = inference::DetectFile(net, r.features, r.table, names[i], inner);
  });
  return out;
}

metrics::EvalReport EvaluateAll(const std::vector<inference::EventList>& predictions,
                                const std::vector<data::Recording>& recordings,
                                const Settings& s) {
  const std::vector<std::string> names = PredictionNames(recordings);
  std::map<std::string, const inference::EventList*> by_name;
  for (const auto& p : predictions) by_name[p.file] = &p;
  for (const auto& [name, list] : by_name) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw DataError(fmt::format("predictions name unknown file '{}'", name));
    }
  }
  std::vector<metrics::FileResult> files;
  for (size_t i = 0; i < recordings.size(); ++i) {
    const data::Recording& r = recordings[i];
    const auto targets = metrics::ScoringTargets(r.table, s.inference.n_shots,
                                                 s.inference.target_class);
    std::vector<inference::Event> predicted;
    if (auto it = by_name.find(names[i]); it != by_name.end()) {
      predicted = it->second->events;
    }
    std::string group = s.group_by == "file" ? names[i] : r.entry.subset;
    if (group.empty()) group = "all";
    files.push_back({names[i], group, metrics::MatchEvents(predicted, targets, s.min_iou)});
  }
  return metrics::Aggregate(files);
}

void ExperimentPlan::Validate() const {
  if (runs.empty()) throw UsageError("plan: no runs");
  if (n_trials < 1) throw UsageError("plan: n_trials must be >= 1");
  if (parallel_runs < 1) throw UsageError("plan: parallel_runs must be >= 1");
  std::set<std::string> ids;
  for (const RunSpec& r : runs) {
    if (r.id.empty() || r.id.find_first_of("/\\,;") != std::string::npos) {
      throw UsageError(fmt::format("plan: invalid run id '{}'", r.id));
    }
    if (!ids.insert(r.id).second) {
      throw UsageError(fmt::format("plan: duplicate run id '{}'", r.id));
    }
    if (r.n_trials < 0) throw UsageError("plan: n_trials must be >= 1");
    for (const SweepAxis& a : r.sweep) {
      if (a.key.rfind("inference.", 0) != 0 && a.key.rfind("eval.", 0) != 0) {
        throw UsageError(fmt::format(
            "plan: run '{}' sweeps '{}'; only inference.* and eval.* keys can vary "
            "within a trial",
            r.id, a.key));
      }
      if (a.values.empty()) {
        throw UsageError(fmt::format("plan: sweep axis '{}' has no values", a.key));
      }
      Settings probe;
      for (const std::string& v : a.values) ApplyOverride(probe, a.key, v);
    }
    Settings probe;
    ApplyJsonText(probe, base, "plan base");
    ApplyJsonText(probe, r.overrides, "run " + r.id);
  }
}

ExperimentPlan ParsePlan(std::string_view json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw UsageError(fmt::format("{}: invalid JSON: {}", source, e.what()));
  }
  if (!j.is_object()) throw UsageError(source + ": plan must be a JSON object");
  ExperimentPlan plan;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "output_dir") {
        plan.output_dir = v.get<std::string>();
      } else if (key == "base") {
        plan.base = v.dump();
      } else if (key == "base_seed") {
        plan.base_seed = v.get<uint64_t>();
      } else if (key == "n_trials") {
        plan.n_trials = v.get<int>();
      } else if (key == "parallel_runs") {
        plan.parallel_runs = v.get<int>();
      } else if (key == "runs") {
        for (const json& r : v) {
          RunSpec run;
          run.overrides = "{}";
          for (const auto& [rk, rv] : r.items()) {
            if (rk == "id") {
              run.id = rv.get<std::string>();
            } else if (rk == "settings") {
              run.overrides = rv.dump();
            } else if (rk == "n_trials") {
              run.n_trials = rv.get<int>();
            } else if (rk == "sweep") {
              for (const auto& [axis, values] : rv.items()) {
                SweepAxis a{axis, {}};
                for (const json& x : values) a.values.push_back(x.dump());
                run.sweep.push_back(std::move(a));
              }
            } else {
              throw UsageError(fmt::format("{}: unknown run key '{}'", source, rk));
            }
          }
          plan.runs.push_back(std::move(run));
        }
      } else {
        throw UsageError(fmt::format("{}: unknown plan key '{}'", source, key));
      }
    }
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("{}: malformed plan: {}", source, e.what()));
  }
  plan.Validate();
  return plan;
}

ExperimentPlan LoadPlan(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("{}: cannot open plan", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParsePlan(ss.str(), path.string());
}

std::vector<SweepPoint> ExpandGrid(const std::vector<SweepAxis>& axes) {
  std::vector<SweepPoint> points = {{}};
  for (const SweepAxis& a : axes) {
    std::vector<SweepPoint> next;
    for (const SweepPoint& p : points) {
      for (const std::string& v : a.values) {
        SweepPoint q = p;
        q.emplace_back(a.key, v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

std::string PointLabel(const SweepPoint& point) {
  if (point.empty()) return "default";
  std::string out;
  for (const auto& [k, v] : point) {
    if (!out.empty()) out += ';';
    out += k + "=" + v;
  }
  return out;
}

uint64_t TrialSeed(uint64_t base_seed, const std::string& run_id, int trial) {
  return DeriveSeed(base_seed, std::string_view(run_id), static_cast<uint64_t>(trial));
}

uint64_t TrialNegativeSeed(uint64_t base_seed, int trial) {
  return DeriveSeed(base_seed, "negative-sets", static_cast<uint64_t>(trial));
}

PlanResult RunPlan(const ExperimentPlan& plan) {
  plan.Validate();
  struct Job {
    const RunSpec* run;
    int trial;
  };
  std::vector<Job> jobs;
  for (const RunSpec& r : plan.runs) {
    const int n = r.n_trials > 0 ? r.n_trials : plan.n_trials;
    for (int t = 0; t < n; ++t) jobs.push_back({&r, t});
  }
  CorpusCache cache;
  std::vector<std::vector<TrialRow>> results(jobs.size());
  std::vector<char> skipped(jobs.size(), 0);
  ParallelFor(jobs.size(), plan.parallel_runs, [&](size_t i) {
    const Job& job = jobs[i];
    const fs::path dir =
        fs::path(plan.output_dir) / job.run->id / std::to_string(job.trial);
    if (fs::exists(dir / kDoneMarker)) {
      results[i] = ReadTrialRows(dir / "results.csv");
      skipped[i] = 1;
      spdlog::info("run {} trial {}: complete, reusing results", job.run->id, job.trial);
      return;
    }
    spdlog::info("run {} trial {}: starting", job.run->id, job.trial);
    results[i] = RunTrial(plan, *job.run, job.trial, cache);
  });
  PlanResult out;
  for (size_t i = 0; i < jobs.size(); ++i) {
    out.rows.insert(out.rows.end(), results[i].begin(), results[i].end());
    (skipped[i] ? out.trials_skipped : out.trials_run)++;
  }
  WriteTrialRows(fs::path(plan.output_dir) / "summary.csv", out.rows);
  WriteSummaryCi(fs::path(plan.output_dir) / "summary_ci.csv", out.rows);
  return out;
}

void WriteTrialRows(const fs::path& path, const std::vector<TrialRow>& rows) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("{}: cannot write", path.string()));
  out << kRowsHeader << "\n";
  for (const TrialRow& r : rows) {
    out << fmt::format("{},{},{},{},{},{:.2f},{:.2f},{:.2f},{},{},{}\n", r.run_id,
                       r.trial, r.seed, r.point, r.config, r.scores.precision,
                       r.scores.recall, r.scores.f1, r.counts.tp, r.counts.fp,
                       r.counts.fn);
  }
}

std::vector<TrialRow> ReadTrialRows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("{}: cannot open", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != kRowsHeader) {
    throw DataError(fmt::format("{}: expected header '{}'", path.string(), kRowsHeader));
  }
  std::vector<TrialRow> rows;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = SplitLine(line);
    const std::string where = fmt::format("{}: row {}", path.string(), n);
    if (f.size() != 11) throw DataError(where + ": expected 11 columns");
    TrialRow r;
    r.run_id = f[0];
    r.trial = ParseNumber<int>(f[1], where);
    r.seed = ParseNumber<uint64_t>(f[2], where);
    r.point = ParseNumber<int>(f[3], where);
    r.config = f[4];
    r.scores.precision = ParseNumber<double>(f[5], where);
    r.scores.recall = ParseNumber<double>(f[6], where);
    r.scores.f1 = ParseNumber<double>(f[7], where);
    r.counts.tp = ParseNumber<int>(f[8], where);
    r.counts.fp = ParseNumber<int>(f[9], where);
    r.counts.fn = ParseNumber<int>(f[10], where);
    rows.push_back(std::move(r));
  }
  return rows;
}

void WriteSummaryCi(const fs::path& path, const std::vector<TrialRow>& rows) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<double>> f1;
  for (const TrialRow& r : rows) {
    const auto key = std::make_pair(r.run_id, r.config);
    if (!f1.count(key)) order.push_back(key);
    f1[key].push_back(r.scores.f1);
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("{}: cannot write", path.string()));
  out << "run_id,config,trials,f1_mean,f1_half_width\n";
  for (const auto& key : order) {
    const auto& v = f1[key];
    double mean = 0.0;
    double half = 0.0;
    if (v.size() >= 2) {
      const metrics::TrialSummary s = metrics::SummarizeTrials(v);
      mean = s.mean;
      half = s.half_width;
    } else {
      mean = v[0];
    }
    out << fmt::format("{},{},{},{:.2f},{:.2f}\n", key.first, key.second, v.size(),
                       mean, half);
  }
}

}  // namespace fsbsed::experiment
