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

#ifndef FSBSED_PROTONET_H_
#define FSBSED_PROTONET_H_

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fsbsed/tensor.h"

// Prototype classifier over embeddings. Everything here is computed in
// double precision; rows of a matrix are embedding vectors.

namespace fsbsed::protonet {

using Matrix = nn::Mat<double>;
using Vector = Eigen::RowVectorXd;

enum class Distance { kSquaredEuclidean, kCosine };

Distance ParseDistance(std::string_view name);  // "euclidean" | "cosine"
std::string DistanceName(Distance d);

// Squared Euclidean, or 1 - cosine similarity. Zero vectors have cosine
// similarity 0 with everything except themselves.
double PairDistance(const Vector& a, const Vector& b, Distance d);

// Mean of the rows. Requires at least one row.
Vector ComputePrototype(const Matrix& embeddings);

struct PrototypePair {
  int class_index = 0;
  Vector positive;
  Vector negative;
  int k_used = 0;
};

// Probabilities over all 2N prototypes, positives first then negatives:
//   p_j = exp(-d(q, a_j)) / sum_i exp(-d(q, a_i)).
// Evaluated with max subtraction. positives and negatives are N x D.
Eigen::VectorXd ClassifyAll(const Vector& query, const Matrix& positives,
                            const Matrix& negatives, Distance d);

// The N positive entries of ClassifyAll.
Eigen::VectorXd Classify(const Vector& query, const Matrix& positives,
                         const Matrix& negatives, Distance d);
Eigen::VectorXd Classify(const Vector& query,
                         const std::vector<PrototypePair>& prototypes,
                         Distance d);

// Background label for queries that belong to no class.
inline constexpr int kNoClass = -1;

struct LossResult {
  double loss = 0.0;
  int correct = 0;  // labelled queries whose argmax over 2N is their class
  int labelled = 0;
  Matrix grad_support;   // same shape as `support`
  Matrix grad_negative;  // same shape as `negative`
  Matrix grad_query;     // same shape as `query`
};

// Episode loss: for each query and each class n, the negative log
// probability that the binary decision "is class n" is correct:
//   -log p_n          for the query's own class,
//   -log(1 - p_n)     for every other class,
// with p from ClassifyAll. Queries labelled kNoClass take only the second
// form. support holds n_way * k_shot rows class major; negative holds
// n_way * k_negative rows class major.
LossResult EpisodeLoss(const Matrix& support, const Matrix& negative,
                       const Matrix& query, const std::vector<int>& labels,
                       int n_way, Distance d);

}  // namespace fsbsed::protonet

#endif  // FSBSED_PROTONET_H_
