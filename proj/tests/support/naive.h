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

#ifndef FSBSED_TESTS_SUPPORT_NAIVE_H_
#define FSBSED_TESTS_SUPPORT_NAIVE_H_

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "fsbsed/inference.h"
#include "fsbsed/protonet.h"
#include "fsbsed/tensor.h"

// Textbook reference implementations, written independently of the library.
// Nothing here is stabilised or clever; that is the point.

namespace fsbsed::testing {

template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
T NaiveDistance(const RowVec<T>& a, const RowVec<T>& b, protonet::Distance d) {
  T s = 0, dot = 0, na = 0, nb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    s += (a[i] - b[i]) * (a[i] - b[i]);
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (d == protonet::Distance::kSquaredEuclidean) return s;
  return 1 - dot / (std::sqrt(na) * std::sqrt(nb));
}

// p_n = exp(-d(q, pos_n)) / sum over every positive and negative prototype.
// With `complement`, also each 1 - p_n formed as the sum of the other terms
// over the denominator, which avoids cancellation when p_n is close to one.
template <typename T>
std::vector<T> NaiveProbabilities(const RowVec<T>& q, const nn::Mat<T>& pos,
                                  const nn::Mat<T>& neg, protonet::Distance d,
                                  std::vector<T>* complement = nullptr) {
  std::vector<T> terms;
  for (Eigen::Index i = 0; i < pos.rows(); ++i) {
    terms.push_back(std::exp(-NaiveDistance<T>(q, pos.row(i), d)));
  }
  for (Eigen::Index i = 0; i < neg.rows(); ++i) {
    terms.push_back(std::exp(-NaiveDistance<T>(q, neg.row(i), d)));
  }
  T denom = 0;
  for (T t : terms) denom += t;
  std::vector<T> p;
  for (Eigen::Index i = 0; i < pos.rows(); ++i) {
    p.push_back(terms[i] / denom);
    if (complement) {
      T rest = 0;
      for (size_t j = 0; j < terms.size(); ++j) {
        if (j != static_cast<size_t>(i)) rest += terms[j];
      }
      complement->push_back(rest / denom);
    }
  }
  return p;
}

template <typename T>
RowVec<T> NaiveMean(const nn::Mat<T>& rows) {
  RowVec<T> m = RowVec<T>::Zero(rows.cols());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) m[c] += rows(r, c);
  }
  return m / static_cast<T>(rows.rows());
}

// Episode loss from the per-class binary decision terms: a query of class n
// pays -log p_n, and -log(1 - p_m) for every other class m. Support rows are
// grouped by class, k per class; negatives likewise.
template <typename T>
T NaiveLoss(const nn::Mat<T>& support, const nn::Mat<T>& negative,
            const nn::Mat<T>& query, const std::vector<int>& labels, int n_way,
            protonet::Distance d) {
  const int k = support.rows() / n_way, kn = negative.rows() / n_way;
  nn::Mat<T> pos(n_way, support.cols()), neg(n_way, support.cols());
  for (int n = 0; n < n_way; ++n) {
    pos.row(n) = NaiveMean<T>(support.middleRows(n * k, k));
    neg.row(n) = NaiveMean<T>(negative.middleRows(n * kn, kn));
  }
  T loss = 0;
  for (Eigen::Index i = 0; i < query.rows(); ++i) {
    std::vector<T> not_p;
    const std::vector<T> p = NaiveProbabilities<T>(query.row(i), pos, neg, d, &not_p);
    for (int n = 0; n < n_way; ++n) {
      loss -= std::log(n == labels[i] ? p[n] : not_p[n]);
    }
  }
  return loss;
}

// Largest TP count over every one-to-one assignment, by exhaustive search.
inline int BruteForceMatches(const std::vector<inference::Event>& pred,
                             const std::vector<inference::Event>& gt, size_t i,
                             std::vector<bool>& used, double min_iou) {
  if (i == pred.size()) return 0;
  int best = BruteForceMatches(pred, gt, i + 1, used, min_iou);
  for (size_t j = 0; j < gt.size(); ++j) {
    if (used[j]) continue;
    const double lo = std::max(pred[i].onset, gt[j].onset);
    const double hi = std::min(pred[i].offset, gt[j].offset);
    const double inter = std::max(0.0, hi - lo);
    const double uni =
        (pred[i].offset - pred[i].onset) + (gt[j].offset - gt[j].onset) - inter;
    if (inter / uni < min_iou) continue;
    used[j] = true;
    best = std::max(best, 1 + BruteForceMatches(pred, gt, i + 1, used, min_iou));
    used[j] = false;
  }
  return best;
}

inline int BruteForceMatches(const std::vector<inference::Event>& pred,
                             const std::vector<inference::Event>& gt, double min_iou) {
  std::vector<bool> used(gt.size(), false);
  return BruteForceMatches(pred, gt, 0, used, min_iou);
}

// Sorted, disjoint intervals inside [0, 4).
inline std::vector<inference::Event> RandomEvents(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 4.0);
  std::vector<double> cuts(2 * n);
  for (double& c : cuts) c = u(rng);
  std::sort(cuts.begin(), cuts.end());
  std::vector<inference::Event> out;
  for (int i = 0; i < n; ++i) {
    if (cuts[2 * i + 1] > cuts[2 * i]) out.push_back({cuts[2 * i], cuts[2 * i + 1]});
  }
  return out;
}

// Jittered copies of `gt` plus a few strays, kept sorted and disjoint and at
// most 8, so most predictions compete for one or two truths.
inline std::vector<inference::Event> NoisyCopies(std::mt19937_64& rng,
                                                 const std::vector<inference::Event>& gt) {
  std::normal_distribution<double> jitter(0.0, 0.08);
  std::vector<inference::Event> cand;
  for (const inference::Event& e : gt) {
    cand.push_back({e.onset + jitter(rng), e.offset + jitter(rng)});
    if (rng() % 3 == 0) cand.push_back({e.offset - 0.05, e.offset + 0.2});
  }
  for (const inference::Event& e : RandomEvents(rng, 2)) cand.push_back(e);
  std::sort(cand.begin(), cand.end(),
            [](const inference::Event& a, const inference::Event& b) {
              return a.onset < b.onset;
            });
  std::vector<inference::Event> out;
  for (const inference::Event& e : cand) {
    if (e.offset <= e.onset) continue;
    if (!out.empty() && e.onset < out.back().offset) continue;
    if (out.size() == 8) break;
    out.push_back(e);
  }
  return out;
}

}  // namespace fsbsed::testing

#endif  // FSBSED_TESTS_SUPPORT_NAIVE_H_
