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

#include "gradient_suite.h"

#include <algorithm>
#include <random>
#include <vector>

#include "fsbsed/layers.h"
#include "fsbsed/network.h"
#include "gradcheck.h"
#include "naive.h"

namespace fsbsed::testing {
namespace {

using nn::FeatureMaps;
using nn::Mat;

template <typename Analytic>
void Record(GradReport& r, const std::vector<double>& fd, const Analytic& analytic,
            const std::string& what) {
  const double e = MaxRelativeError(fd, analytic);
  if (r.where.empty() || e > r.worst) {
    r.worst = e;
    r.where = what;
  }
  r.checked += fd.size();
  r.skipped += CountSkipped(fd);
}

nn::NetworkConfig NetworkCheckConfig() {
  nn::NetworkConfig cfg;
  cfg.input_height = 16;
  cfg.input_width = 8;
  cfg.channels = {3, 4, 3};
  return cfg;
}

using Ld = long double;

// The network in long double, for finite differences whose roundoff stays
// far below the gradients being checked. In double the forward pass alone
// carries enough roundoff to swamp entries six or seven decades below the
// largest. Forward() records the branch choices (pooling winners and the
// signs of the pre-activations) so that elements whose probes cross a kink
// can be skipped.
class LongDoubleOracle {
 public:
  LongDoubleOracle(const nn::EmbeddingNetwork<double>& net, const FeatureMaps<double>& x)
      : net_(net.Cast<Ld>()), x_(x.channels, x.batch, x.height, x.width) {
    std::copy(x.data.begin(), x.data.end(), x_.data.begin());
  }

  Mat<Ld> Forward() {
    branches_.clear();
    FeatureMaps<Ld> h = x_;
    for (auto& block : net_.blocks()) {
      typename nn::ConvBlock<Ld>::Cache cache;
      h = block.ForwardTrain(h, cache);
      branches_.insert(branches_.end(), cache.argmax.begin(), cache.argmax.end());
      for (Ld v : cache.bn_out.data) branches_.push_back(v > 0);
    }
    return nn::Flatten(h);
  }

  // Compares the analytic gradients of `net` (parameters) and `dx` (input)
  // with central differences of `loss`, which must call Forward().
  template <typename Loss>
  GradReport Check(nn::EmbeddingNetwork<double>& net, const FeatureMaps<double>& dx,
                   Loss&& loss) {
    auto pattern = [this] { return branches_; };
    GradReport r;
    const auto params = net.Parameters();
    const auto oracle_params = net_.Parameters();
    for (size_t i = 0; i < params.size(); ++i) {
      Record(r, GradCheckPiecewise(oracle_params[i]->value, loss, pattern),
             params[i]->grad, params[i]->name);
    }
    Record(r, GradCheckPiecewise(x_.data, loss, pattern), dx.data, "input");
    return r;
  }

 private:
  nn::EmbeddingNetwork<Ld> net_;
  FeatureMaps<Ld> x_;
  std::vector<int64_t> branches_;
};

}  // namespace

void GradReport::Merge(const GradReport& o) {
  if (o.worst > worst) {
    worst = o.worst;
    where = o.where;
  }
  checked += o.checked;
  skipped += o.skipped;
}

GradReport CheckConv(int kernel, uint64_t seed) {
  std::mt19937_64 rng(seed);
  nn::Conv2d<double> conv(3, 4, kernel, /*with_bias=*/kernel == 1);
  FillNormal(conv.weight.value, rng);
  if (conv.has_bias) FillNormal(conv.bias.value, rng);
  FeatureMaps<double> x(3, 2, 5, 4);
  FillNormal(x.data, rng);
  FeatureMaps<double> w(4, 2, 5, 4);
  FillNormal(w.data, rng);
  auto loss = [&] {
    const FeatureMaps<double> y = conv.Forward(x, nullptr);
    return w.matrix().cwiseProduct(y.matrix()).sum();
  };
  nn::Conv2dCache<double> cache;
  conv.Forward(x, &cache);
  conv.weight.grad.setZero();
  if (conv.has_bias) conv.bias.grad.setZero();
  const FeatureMaps<double> dx = conv.Backward(w, cache);
  GradReport r;
  Record(r, GradCheck(conv.weight.value, loss), conv.weight.grad, "conv.weight");
  if (conv.has_bias) Record(r, GradCheck(conv.bias.value, loss), conv.bias.grad, "conv.bias");
  Record(r, GradCheck(x.data, loss), dx.data, "conv.input");
  return r;
}

GradReport CheckBatchNorm(uint64_t seed) {
  std::mt19937_64 rng(seed);
  nn::BatchNorm2d<double> bn(3, 1e-5, 0.1);
  FillNormal(bn.gamma.value, rng);
  FillNormal(bn.beta.value, rng);
  FeatureMaps<double> x(3, 4, 3, 2);
  FillNormal(x.data, rng);
  FeatureMaps<double> w(3, 4, 3, 2);
  FillNormal(w.data, rng);
  auto loss = [&] {
    nn::BatchNormCache<double> c;
    return w.matrix().cwiseProduct(bn.ForwardTrain(x, c).matrix()).sum();
  };
  nn::BatchNormCache<double> cache;
  bn.ForwardTrain(x, cache);
  bn.gamma.grad.setZero();
  bn.beta.grad.setZero();
  const FeatureMaps<double> dx = bn.Backward(w, cache);
  GradReport r;
  Record(r, GradCheck(bn.gamma.value, loss), bn.gamma.grad, "bn.gamma");
  Record(r, GradCheck(bn.beta.value, loss), bn.beta.grad, "bn.beta");
  Record(r, GradCheck(x.data, loss), dx.data, "bn.input");
  return r;
}

GradReport CheckPointwise(uint64_t seed) {
  std::mt19937_64 rng(seed);
  FeatureMaps<double> x(2, 2, 5, 6);
  FillNormal(x.data, rng);
  FeatureMaps<double> w(2, 2, 2, 3);
  FillNormal(w.data, rng);
  auto loss = [&] {
    const FeatureMaps<double> y = nn::MaxPool2x2(nn::LeakyRelu(x, 0.1), nullptr);
    return w.matrix().cwiseProduct(y.matrix()).sum();
  };
  std::vector<int64_t> argmax;
  const FeatureMaps<double> a = nn::LeakyRelu(x, 0.1);
  nn::MaxPool2x2(a, &argmax);
  const FeatureMaps<double> da = nn::MaxPool2x2Backward(w, argmax, a);
  const FeatureMaps<double> dx = nn::LeakyReluBackward(da, x, 0.1);
  GradReport r;
  Record(r, GradCheck(x.data, loss), dx.data, "relu_pool.input");
  return r;
}

GradReport CheckNetwork(uint64_t seed) {
  std::mt19937_64 rng(seed);
  nn::EmbeddingNetwork<double> net =
      nn::EmbeddingNetwork<float>(NetworkCheckConfig(), seed).Cast<double>();
  // Fresh networks have unit scales and zero shifts; perturb them so their
  // gradients are generic.
  for (nn::Param<double>* p : net.Parameters()) {
    if (p->name.find("bn.") != std::string::npos || p->name.find("bias") != std::string::npos) {
      FillNormal(p->value, rng, 0.3);
      if (p->name.find("gamma") != std::string::npos) p->value.array() += 1.0;
    }
  }
  FeatureMaps<double> x(1, 4, 16, 8);
  FillNormal(x.data, rng);
  Mat<double> w(4, net.embedding_dim());
  FillNormal(w, rng);
  net.Forward(x, nn::Mode::kTrain);
  net.ZeroGrad();
  const FeatureMaps<double> dx = net.Backward(w);

  LongDoubleOracle oracle(net, x);
  const Mat<Ld> w_ld = w.cast<Ld>();
  auto loss = [&] { return w_ld.cwiseProduct(oracle.Forward()).sum(); };
  return oracle.Check(net, dx, loss);
}

GradReport CheckComposed(uint64_t seed, protonet::Distance distance) {
  const nn::NetworkConfig cfg = NetworkCheckConfig();
  const int n_way = 2, k = 2, kn = 2, nq = 2;
  const int rows = n_way * (k + kn + nq);
  std::mt19937_64 rng(seed);
  nn::EmbeddingNetwork<double> net = nn::EmbeddingNetwork<float>(cfg, seed).Cast<double>();
  FeatureMaps<double> x(1, rows, cfg.input_height, cfg.input_width);
  FillNormal(x.data, rng);
  std::vector<int> labels;
  for (int n = 0; n < n_way; ++n) labels.insert(labels.end(), nq, n);

  const protonet::Matrix e = net.Forward(x, nn::Mode::kTrain);
  const protonet::LossResult lr =
      protonet::EpisodeLoss(e.topRows(n_way * k), e.middleRows(n_way * k, n_way * kn),
                            e.bottomRows(n_way * nq), labels, n_way, distance);
  protonet::Matrix grad(rows, net.embedding_dim());
  grad << lr.grad_support, lr.grad_negative, lr.grad_query;
  net.ZeroGrad();
  const FeatureMaps<double> dx = net.Backward(grad);

  LongDoubleOracle oracle(net, x);
  auto loss = [&] {
    const Mat<Ld> el = oracle.Forward();
    return NaiveLoss<Ld>(el.topRows(n_way * k), el.middleRows(n_way * k, n_way * kn),
                         el.bottomRows(n_way * nq), labels, n_way, distance);
  };
  GradReport r = oracle.Check(net, dx, loss);
  r.loss = lr.loss;
  r.oracle_loss = static_cast<double>(loss());
  return r;
}

}  // namespace fsbsed::testing
