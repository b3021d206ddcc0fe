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

#include "fsbsed/metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "fsbsed/error.h"

namespace fsbsed::metrics {
namespace {

constexpr int kInf = std::numeric_limits<int>::max();

class HopcroftKarp {
 public:
  HopcroftKarp(const std::vector<std::vector<int>>& adj, int right)
      : adj_(adj),
        match_left_(adj.size(), -1),
        match_right_(right, -1),
        dist_(adj.size(), 0) {}

  int Run() {
    int matching = 0;
    while (Bfs()) {
      for (size_t u = 0; u < adj_.size(); ++u) {
        if (match_left_[u] < 0 && Dfs(static_cast<int>(u))) ++matching;
      }
    }
    return matching;
  }

 private:
  bool Bfs() {
    std::queue<int> q;
    bool reachable_free = false;
    for (size_t u = 0; u < adj_.size(); ++u) {
      if (match_left_[u] < 0) {
        dist_[u] = 0;
        q.push(static_cast<int>(u));
      } else {
        dist_[u] = kInf;
      }
    }
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj_[u]) {
        const int w = match_right_[v];
        if (w < 0) {
          reachable_free = true;
        } else if (dist_[w] == kInf) {
          dist_[w] = dist_[u] + 1;
          q.push(w);
        }
      }
    }
    return reachable_free;
  }

  bool Dfs(int u) {
    for (int v : adj_[u]) {
      const int w = match_right_[v];
      if (w < 0 || (dist_[w] == dist_[u] + 1 && Dfs(w))) {
        match_left_[u] = v;
        match_right_[v] = u;
        return true;
      }
    }
    dist_[u] = kInf;
    return false;
  }

  const std::vector<std::vector<int>>& adj_;
  std::vector<int> match_left_;
  std::vector<int> match_right_;
  std::vector<int> dist_;
};

double Round2(double x) { return std::round(x * 100.0) / 100.0; }

std::vector<GroupRow> Rows(const EvalReport& r) {
  std::vector<GroupRow> rows = r.groups;
  rows.push_back(r.overall);
  return rows;
}

}  // namespace

double Iou(const Event& a, const Event& b) {
  const double inter = std::min(a.offset, b.offset) - std::max(a.onset, b.onset);
  if (inter <= 0.0) return 0.0;
  const double uni = std::max(a.offset, b.offset) - std::min(a.onset, b.onset);
  return uni > 0.0 ? inter / uni : 0.0;
}

int MaximumMatching(const std::vector<std::vector<int>>& adjacency, int right_count) {
  return HopcroftKarp(adjacency, right_count).Run();
}

Counts MatchEvents(const std::vector<Event>& predicted,
                   const std::vector<Event>& ground_truth, double min_iou) {
  std::vector<std::vector<int>> adj(predicted.size());
  for (size_t p = 0; p < predicted.size(); ++p) {
    for (size_t g = 0; g < ground_truth.size(); ++g) {
      if (Iou(predicted[p], ground_truth[g]) >= min_iou) {
        adj[p].push_back(static_cast<int>(g));
      }
    }
  }
  Counts c;
  c.tp = MaximumMatching(adj, static_cast<int>(ground_truth.size()));
  c.fp = static_cast<int>(predicted.size()) - c.tp;
  c.fn = static_cast<int>(ground_truth.size()) - c.tp;
  return c;
}

std::vector<Event> ScoringTargets(const data::AnnotationTable& table, int n_shots,
                                  const std::string& target_class) {
  inference::InferenceConfig cfg;
  cfg.n_shots = n_shots;
  cfg.target_class = target_class;
  std::string target;
  const auto shots = inference::SelectShots(table, cfg, &target);
  const double start = shots.back().offset;
  std::vector<Event> out;
  for (const auto& e : table.Select(target, data::Label::kPos)) {
    if (e.onset >= start) out.push_back({e.onset, e.offset});
  }
  return out;
}

Scores ComputeScores(const Counts& c) {
  Scores s;
  const int pred = c.tp + c.fp;
  const int gt = c.tp + c.fn;
  const double p = pred > 0 ? 100.0 * c.tp / pred : 0.0;
  const double r = gt > 0 ? 100.0 * c.tp / gt : 0.0;
  s.precision = Round2(p);
  s.recall = Round2(r);
  s.f1 = p + r > 0.0 ? Round2(2.0 * p * r / (p + r)) : 0.0;
  return s;
}

EvalReport Aggregate(const std::vector<FileResult>& files) {
  EvalReport report;
  report.files = files;
  std::map<std::string, Counts> groups;
  for (const FileResult& f : files) {
    groups[f.group] += f.counts;
    report.overall.counts += f.counts;
  }
  for (const auto& [name, counts] : groups) {
    report.groups.push_back({name, counts, ComputeScores(counts)});
  }
  report.overall.group = "overall";
  report.overall.scores = ComputeScores(report.overall.counts);
  return report;
}

TrialSummary SummarizeTrials(const std::vector<double>& values, double confidence) {
  if (values.size() < 2) {
    throw UsageError("trial summary: a confidence interval needs at least two trials");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw UsageError("trial summary: confidence must lie in (0, 1)");
  }
  TrialSummary s;
  s.n = static_cast<int>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= s.n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / (s.n - 1));
  const boost::math::students_t dist(s.n - 1);
  const double t = boost::math::quantile(dist, 0.5 + confidence / 2.0);
  s.half_width = t * s.stddev / std::sqrt(static_cast<double>(s.n));
  return s;
}

void WriteReportCsv(const std::filesystem::path& path, const EvalReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("{}: cannot write report", path.string()));
  out << "group,precision,recall,f1,tp,fp,fn\n";
  for (const GroupRow& g : Rows(report)) {
    out << fmt::format("{},{:.2f},{:.2f},{:.2f},{},{},{}\n", g.group,
                       g.scores.precision, g.scores.recall, g.scores.f1,
                       g.counts.tp, g.counts.fp, g.counts.fn);
  }
}

std::string FormatReportTable(const EvalReport& report) {
  const auto rows = Rows(report);
  size_t width = 5;
  for (const GroupRow& g : rows) width = std::max(width, g.group.size());
  std::string out = fmt::format("{:<{}}  {:>9}  {:>9}  {:>9}  {:>5}  {:>5}  {:>5}\n",
                                "group", width, "precision", "recall", "f1", "tp",
                                "fp", "fn");
  for (const GroupRow& g : rows) {
    out += fmt::format("{:<{}}  {:>9.2f}  {:>9.2f}  {:>9.2f}  {:>5}  {:>5}  {:>5}\n",
                       g.group, width, g.scores.precision, g.scores.recall,
                       g.scores.f1, g.counts.tp, g.counts.fp, g.counts.fn);
  }
  return out;
}

void WriteFileCsv(const std::filesystem::path& path, const EvalReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("{}: cannot write report", path.string()));
  out << "file,group,tp,fp,fn\n";
  for (const FileResult& f : report.files) {
    out << fmt::format("{},{},{},{},{}\n", f.file, f.group, f.counts.tp,
                       f.counts.fp, f.counts.fn);
  }
}

}  // namespace fsbsed::metrics
