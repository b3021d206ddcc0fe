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

#include "fsbsed/network.h"

#include <cmath>

#include <fmt/format.h>

#include "fsbsed/error.h"
#include "fsbsed/seed.h"

namespace fsbsed::nn {
namespace {

template <typename S>
void KaimingUniform(Mat<S>& w, int fan_in, double slope, Rng& rng) {
  const double gain = std::sqrt(2.0 / (1.0 + slope * slope));
  const double bound = gain * std::sqrt(3.0 / fan_in);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w.data()[i] = static_cast<S>((2.0 * UniformUnit(rng) - 1.0) * bound);
  }
}

template <typename S>
FeatureMaps<S> ShapeOnly(const FeatureMaps<S>& x) {
  FeatureMaps<S> s;
  s.channels = x.channels;
  s.batch = x.batch;
  s.height = x.height;
  s.width = x.width;
  return s;
}

}  // namespace

void NetworkConfig::Validate() const {
  if (input_height < 8 || input_width < 8) {
    throw UsageError(fmt::format(
        "network: input {}x{} too small for three 2x2 poolings (need >= 8x8)",
        input_height, input_width));
  }
  for (int c : channels) {
    if (c < 1) throw UsageError("network: channel counts must be positive");
  }
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    throw UsageError("network: leaky slope must be in [0, 1)");
  }
}

int NetworkConfig::embedding_dim() const {
  return channels.back() * (input_height / 8) * (input_width / 8);
}

template <typename S>
ConvBlock<S>::ConvBlock(int in, int out, S slope_in, S bn_eps, S bn_momentum)
    : conv(in, out, 3, /*with_bias=*/false),
      bn(out, bn_eps, bn_momentum),
      slope(slope_in) {
  if (in != out) projection.emplace(in, out, 1, /*with_bias=*/true);
}

template <typename S>
FeatureMaps<S> ConvBlock<S>::ForwardTrain(const FeatureMaps<S>& x,
                                          Cache& cache) {
  const FeatureMaps<S> z = conv.Forward(x, &cache.conv);
  cache.bn_out = bn.ForwardTrain(z, cache.bn);
  FeatureMaps<S> summed = LeakyRelu(cache.bn_out, slope);
  if (projection) {
    summed.matrix() += projection->Forward(x, &cache.projection).matrix();
  } else {
    summed.matrix() += x.matrix();
  }
  cache.summed = ShapeOnly(summed);
  return MaxPool2x2(summed, &cache.argmax);
}

template <typename S>
FeatureMaps<S> ConvBlock<S>::ForwardEval(const FeatureMaps<S>& x) const {
  FeatureMaps<S> summed = LeakyRelu(bn.ForwardEval(conv.Forward(x, nullptr)), slope);
  if (projection) {
    summed.matrix() += projection->Forward(x, nullptr).matrix();
  } else {
    summed.matrix() += x.matrix();
  }
  return MaxPool2x2(summed, nullptr);
}

template <typename S>
FeatureMaps<S> ConvBlock<S>::Backward(const FeatureMaps<S>& dy,
                                      const Cache& cache) {
  const FeatureMaps<S> ds = MaxPool2x2Backward(dy, cache.argmax, cache.summed);
  const FeatureMaps<S> du = LeakyReluBackward(ds, cache.bn_out, slope);
  FeatureMaps<S> dx = conv.Backward(bn.Backward(du, cache.bn), cache.conv);
  if (projection) {
    dx.matrix() += projection->Backward(ds, cache.projection).matrix();
  } else {
    dx.matrix() += ds.matrix();
  }
  return dx;
}

template <typename S>
EmbeddingNetwork<S>::EmbeddingNetwork(const NetworkConfig& config,
                                      uint64_t seed)
    : config_(config) {
  config_.Validate();
  const S slope = static_cast<S>(config_.leaky_slope);
  int in = 1;
  for (int i = 0; i < 3; ++i) {
    const int out = config_.channels[i];
    blocks_[i] = ConvBlock<S>(in, out, slope, static_cast<S>(config_.bn_eps),
                              static_cast<S>(config_.bn_momentum));
    in = out;
  }
  Rng rng(seed);
  for (auto& block : blocks_) {
    KaimingUniform(block.conv.weight.value, block.conv.in_channels * 9,
                   config_.leaky_slope, rng);
    if (block.projection) {
      KaimingUniform(block.projection->weight.value,
                     block.projection->in_channels, config_.leaky_slope, rng);
    }
  }
  auto name = [](int b, const char* what) {
    return fmt::format("block{}.{}", b, what);
  };
  for (int b = 0; b < 3; ++b) {
    blocks_[b].conv.weight.name = name(b, "conv.weight");
    blocks_[b].bn.gamma.name = name(b, "bn.gamma");
    blocks_[b].bn.beta.name = name(b, "bn.beta");
    if (blocks_[b].projection) {
      blocks_[b].projection->weight.name = name(b, "skip.weight");
      blocks_[b].projection->bias.name = name(b, "skip.bias");
    }
  }
}

template <typename S>
void EmbeddingNetwork<S>::CheckInput(const FeatureMaps<S>& batch) const {
  if (batch.channels != 1 || batch.height != config_.input_height ||
      batch.width != config_.input_width) {
    throw UsageError(fmt::format(
        "network: input is {}x{}x{} per sample, expected 1x{}x{}",
        batch.channels, batch.height, batch.width, config_.input_height,
        config_.input_width));
  }
  if (batch.batch < 1) throw UsageError("network: empty batch");
}

template <typename S>
Mat<S> EmbeddingNetwork<S>::Forward(const FeatureMaps<S>& batch, Mode mode) {
  if (mode == Mode::kEval) return Embed(batch);
  CheckInput(batch);
  Cache cache;
  FeatureMaps<S> x = blocks_[0].ForwardTrain(batch, cache.blocks[0]);
  x = blocks_[1].ForwardTrain(x, cache.blocks[1]);
  x = blocks_[2].ForwardTrain(x, cache.blocks[2]);
  cache.out_channels = x.channels;
  cache.out_height = x.height;
  cache.out_width = x.width;
  cache_ = std::move(cache);
  return Flatten(x);
}

template <typename S>
Mat<S> EmbeddingNetwork<S>::Embed(const FeatureMaps<S>& batch) const {
  CheckInput(batch);
  const size_t sample = batch.plane();
  Mat<S> out(batch.batch, embedding_dim());
  for (int n = 0; n < batch.batch; ++n) {
    FeatureMaps<S> x(1, 1, batch.height, batch.width);
    std::copy(batch.data.begin() + n * sample,
              batch.data.begin() + (n + 1) * sample, x.data.begin());
    for (const auto& block : blocks_) x = block.ForwardEval(x);
    out.row(n) = Flatten(x).row(0);
  }
  return out;
}

template <typename S>
FeatureMaps<S> EmbeddingNetwork<S>::Backward(const Mat<S>& grad_embeddings) {
  if (!cache_) {
    throw UsageError("network: Backward called without a train-mode Forward");
  }
  FeatureMaps<S> d = Unflatten(grad_embeddings, cache_->out_channels,
                               cache_->out_height, cache_->out_width);
  for (int b = 2; b >= 0; --b) d = blocks_[b].Backward(d, cache_->blocks[b]);
  return d;
}

template <typename S>
void EmbeddingNetwork<S>::ZeroGrad() {
  for (Param<S>* p : Parameters()) p->grad.setZero();
}

template <typename S>
std::vector<Param<S>*> EmbeddingNetwork<S>::Parameters() {
  std::vector<Param<S>*> out;
  for (auto& b : blocks_) {
    out.push_back(&b.conv.weight);
    out.push_back(&b.bn.gamma);
    out.push_back(&b.bn.beta);
    if (b.projection) {
      out.push_back(&b.projection->weight);
      out.push_back(&b.projection->bias);
    }
  }
  return out;
}

template <typename S>
std::vector<const Param<S>*> EmbeddingNetwork<S>::Parameters() const {
  std::vector<const Param<S>*> out;
  for (Param<S>* p : const_cast<EmbeddingNetwork*>(this)->Parameters()) {
    out.push_back(p);
  }
  return out;
}

template <typename S>
std::vector<std::pair<std::string, Mat<S>*>> EmbeddingNetwork<S>::Buffers() {
  std::vector<std::pair<std::string, Mat<S>*>> out;
  for (int b = 0; b < 3; ++b) {
    out.emplace_back(fmt::format("block{}.bn.running_mean", b),
                     &blocks_[b].bn.running_mean);
    out.emplace_back(fmt::format("block{}.bn.running_var", b),
                     &blocks_[b].bn.running_var);
  }
  return out;
}

template <typename S>
std::vector<std::pair<std::string, const Mat<S>*>>
EmbeddingNetwork<S>::Buffers() const {
  std::vector<std::pair<std::string, const Mat<S>*>> out;
  for (auto& [name, m] : const_cast<EmbeddingNetwork*>(this)->Buffers()) {
    out.emplace_back(name, m);
  }
  return out;
}

template <typename S>
size_t EmbeddingNetwork<S>::ParameterCount() const {
  size_t n = 0;
  for (const Param<S>* p : Parameters()) n += static_cast<size_t>(p->value.size());
  return n;
}

template <typename S>
bool EmbeddingNetwork<S>::AllFinite() const {
  for (const Param<S>* p : Parameters()) {
    if (!p->value.allFinite()) return false;
  }
  for (const auto& [name, m] : Buffers()) {
    if (!m->allFinite()) return false;
  }
  return true;
}

template <typename S>
template <typename T>
EmbeddingNetwork<T> EmbeddingNetwork<S>::Cast() const {
  EmbeddingNetwork<T> out(config_, 0);
  const auto src = Parameters();
  const auto dst = out.Parameters();
  for (size_t i = 0; i < src.size(); ++i) {
    dst[i]->value = src[i]->value.template cast<T>();
    dst[i]->grad = src[i]->grad.template cast<T>();
  }
  const auto src_buf = Buffers();
  const auto dst_buf = out.Buffers();
  for (size_t i = 0; i < src_buf.size(); ++i) {
    *dst_buf[i].second = src_buf[i].second->template cast<T>();
  }
  return out;
}

template struct ConvBlock<float>;
template struct ConvBlock<double>;
template struct ConvBlock<long double>;
template class EmbeddingNetwork<float>;
template class EmbeddingNetwork<double>;
template class EmbeddingNetwork<long double>;
template EmbeddingNetwork<long double> EmbeddingNetwork<double>::Cast<long double>() const;
template EmbeddingNetwork<double> EmbeddingNetwork<float>::Cast<double>() const;
template EmbeddingNetwork<float> EmbeddingNetwork<double>::Cast<float>() const;
template EmbeddingNetwork<float> EmbeddingNetwork<float>::Cast<float>() const;
template EmbeddingNetwork<double> EmbeddingNetwork<double>::Cast<double>() const;

}  // namespace fsbsed::nn
