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

#include <random>

#include <benchmark/benchmark.h>

#include "fsbsed/network.h"
#include "fsbsed/optimizer.h"
#include "fsbsed/protonet.h"

namespace {

using fsbsed::nn::EmbeddingNetwork;
using fsbsed::nn::FeatureMaps;
using fsbsed::nn::Mat;

FeatureMaps<float> RandomBatch(int n) {
  FeatureMaps<float> x(1, n, 128, 17);
  std::mt19937 rng(2);
  std::normal_distribution<float> d;
  for (float& v : x.data) v = d(rng);
  return x;
}

void BM_EmbedEval(benchmark::State& state) {
  const EmbeddingNetwork<float> net(fsbsed::nn::NetworkConfig{}, 1);
  const auto x = RandomBatch(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(net.Embed(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmbedEval)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

// One optimisation step of a 3-way 5-shot 5-query episode: 45 patches.
void BM_TrainStep(benchmark::State& state) {
  EmbeddingNetwork<float> net(fsbsed::nn::NetworkConfig{}, 1);
  fsbsed::nn::Adam<float> opt;
  const int n = static_cast<int>(state.range(0));
  const auto x = RandomBatch(n);
  for (auto _ : state) {
    const Mat<float> emb = net.Forward(x, fsbsed::nn::Mode::kTrain);
    net.ZeroGrad();
    net.Backward(Mat<float>::Constant(emb.rows(), emb.cols(), 1e-3f));
    opt.Step(net.Parameters(), 0);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TrainStep)->Arg(45)->Unit(benchmark::kMillisecond);

void BM_EpisodeLoss(benchmark::State& state) {
  const int n_way = static_cast<int>(state.range(0));
  std::mt19937 rng(3);
  std::normal_distribution<double> d;
  auto random = [&](int rows) {
    fsbsed::protonet::Matrix m(rows, 2048);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
    return m;
  };
  const auto sup = random(n_way * 5);
  const auto neg = random(n_way * 5);
  const auto qry = random(n_way * 5);
  std::vector<int> labels;
  for (int c = 0; c < n_way; ++c) labels.insert(labels.end(), 5, c);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fsbsed::protonet::EpisodeLoss(
        sup, neg, qry, labels, n_way, fsbsed::protonet::Distance::kSquaredEuclidean));
  }
}
BENCHMARK(BM_EpisodeLoss)->Arg(3)->Arg(10);

}  // namespace
