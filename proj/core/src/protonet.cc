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

#include "fsbsed/protonet.h"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fsbsed/error.h"

namespace fsbsed::protonet {
namespace {

constexpr double kNormFloor = 1e-12;

// d(q, a) and its gradients with respect to q and a.
double DistanceAndGrad(const Vector& q, const Vector& a, Distance d,
                       Vector* dq, Vector* da) {
  if (d == Distance::kSquaredEuclidean) {
    const Vector diff = q - a;
    *dq = 2.0 * diff;
    *da = -2.0 * diff;
    return diff.squaredNorm();
  }
  const double nq = std::max(q.norm(), kNormFloor);
  const double na = std::max(a.norm(), kNormFloor);
  const double cos = q.dot(a) / (nq * na);
  // d = 1 - cos; dcos/dq = a/(|q||a|) - cos q/|q|^2.
  *dq = -(a / (nq * na) - cos * q / (nq * nq));
  *da = -(q / (nq * na) - cos * a / (na * na));
  return 1.0 - cos;
}

double LogSumExp(const Eigen::VectorXd& x, int skip) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < x.size(); ++i) {
    if (i != skip) m = std::max(m, x[i]);
  }
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    if (i != skip) s += std::exp(x[i] - m);
  }
  return m + std::log(s);
}

void CheckPrototypes(const Vector& query, const Matrix& positives,
                     const Matrix& negatives) {
  if (positives.rows() < 1) throw UsageError("protonet: no prototypes");
  if (positives.rows() != negatives.rows()) {
    throw UsageError(fmt::format("protonet: {} positive vs {} negative prototypes",
                                 positives.rows(), negatives.rows()));
  }
  if (positives.cols() != query.size() || negatives.cols() != query.size()) {
    throw UsageError(fmt::format(
        "protonet: dimension mismatch (query {}, prototypes {}/{})", query.size(),
        positives.cols(), negatives.cols()));
  }
}

}  // namespace

Distance ParseDistance(std::string_view name) {
  if (name == "euclidean" || name == "squared_euclidean") {
    return Distance::kSquaredEuclidean;
  }
  if (name == "cosine") return Distance::kCosine;
  throw UsageError(fmt::format("unknown distance '{}' (euclidean|cosine)", name));
}

std::string DistanceName(Distance d) {
  return d == Distance::kCosine ? "cosine" : "euclidean";
}

double PairDistance(const Vector& a, const Vector& b, Distance d) {
  if (a.size() != b.size()) throw UsageError("protonet: dimension mismatch");
  Vector ga, gb;
  return DistanceAndGrad(a, b, d, &ga, &gb);
}

Vector ComputePrototype(const Matrix& embeddings) {
  if (embeddings.rows() < 1) throw UsageError("protonet: prototype of zero rows");
  return embeddings.colwise().mean();
}

Eigen::VectorXd ClassifyAll(const Vector& query, const Matrix& positives,
                            const Matrix& negatives, Distance d) {
  CheckPrototypes(query, positives, negatives);
  const Eigen::Index n = positives.rows();
  Eigen::VectorXd logits(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    logits[i] = -PairDistance(query, positives.row(i), d);
    logits[n + i] = -PairDistance(query, negatives.row(i), d);
  }
  const double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp();
  return p / p.sum();
}

Eigen::VectorXd Classify(const Vector& query, const Matrix& positives,
                         const Matrix& negatives, Distance d) {
  return ClassifyAll(query, positives, negatives, d).head(positives.rows());
}

Eigen::VectorXd Classify(const Vector& query,
                         const std::vector<PrototypePair>& prototypes,
                         Distance d) {
  const Eigen::Index n = static_cast<Eigen::Index>(prototypes.size());
  if (n < 1) throw UsageError("protonet: no prototypes");
  Matrix pos(n, query.size());
  Matrix neg(n, query.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (prototypes[i].positive.size() != query.size() ||
        prototypes[i].negative.size() != query.size()) {
      throw UsageError("protonet: dimension mismatch");
    }
    pos.row(i) = prototypes[i].positive;
    neg.row(i) = prototypes[i].negative;
  }
  return Classify(query, pos, neg, d);
}

LossResult EpisodeLoss(const Matrix& support, const Matrix& negative,
                       const Matrix& query, const std::vector<int>& labels,
                       int n_way, Distance d) {
  if (n_way < 1) throw UsageError("protonet: n_way must be >= 1");
  if (support.rows() % n_way != 0 || negative.rows() % n_way != 0 ||
      support.rows() == 0 || negative.rows() == 0) {
    throw UsageError("protonet: support/negative rows must be a positive multiple of n_way");
  }
  if (static_cast<size_t>(query.rows()) != labels.size()) {
    throw UsageError("protonet: one label per query required");
  }
  const Eigen::Index dim = support.cols();
  if (negative.cols() != dim || query.cols() != dim) {
    throw UsageError("protonet: embedding dimension mismatch");
  }
  const int k = static_cast<int>(support.rows() / n_way);
  const int k_neg = static_cast<int>(negative.rows() / n_way);
  const int n2 = 2 * n_way;

  Matrix protos(n2, dim);
  for (int n = 0; n < n_way; ++n) {
    protos.row(n) = support.middleRows(n * k, k).colwise().mean();
    protos.row(n_way + n) = negative.middleRows(n * k_neg, k_neg).colwise().mean();
  }

  LossResult out;
  out.grad_query = Matrix::Zero(query.rows(), dim);
  Matrix grad_protos = Matrix::Zero(n2, dim);
  Eigen::VectorXd logits(n2);
  std::vector<Vector> dq(n2), da(n2);
  for (Eigen::Index qi = 0; qi < query.rows(); ++qi) {
    const int y = labels[qi];
    if (y != kNoClass && (y < 0 || y >= n_way)) {
      throw UsageError(fmt::format("protonet: label {} outside [0, {})", y, n_way));
    }
    const Vector q = query.row(qi);
    for (int j = 0; j < n2; ++j) {
      logits[j] = -DistanceAndGrad(q, protos.row(j), d, &dq[j], &da[j]);
    }
    const double lse = LogSumExp(logits, -1);
    const Eigen::VectorXd p = (logits.array() - lse).exp();

    // dL/dlogit_j accumulated over the n_way binary terms.
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n2);
    for (int n = 0; n < n_way; ++n) {
      if (n == y) {
        out.loss += lse - logits[n];
        g += p;
        g[n] -= 1.0;
      } else {
        // -log(1 - p_n) = lse(all) - lse(all but n).
        const double lse_rest = LogSumExp(logits, n);
        out.loss += lse - lse_rest;
        for (int j = 0; j < n2; ++j) {
          const double q_j = j == n ? 0.0 : std::exp(logits[j] - lse_rest);
          g[j] += p[j] - q_j;
        }
      }
    }
    // logit = -distance.
    for (int j = 0; j < n2; ++j) {
      out.grad_query.row(qi) -= g[j] * dq[j];
      grad_protos.row(j) -= g[j] * da[j];
    }
    if (y != kNoClass) {
      ++out.labelled;
      Eigen::Index best;
      logits.maxCoeff(&best);
      if (best == y) ++out.correct;
    }
  }

  out.grad_support.resize(support.rows(), dim);
  out.grad_negative.resize(negative.rows(), dim);
  for (int n = 0; n < n_way; ++n) {
    for (int i = 0; i < k; ++i) {
      out.grad_support.row(n * k + i) = grad_protos.row(n) / k;
    }
    for (int i = 0; i < k_neg; ++i) {
      out.grad_negative.row(n * k_neg + i) = grad_protos.row(n_way + n) / k_neg;
    }
  }
  return out;
}

}  // namespace fsbsed::protonet
