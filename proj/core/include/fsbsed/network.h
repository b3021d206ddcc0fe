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

#ifndef FSBSED_NETWORK_H_
#define FSBSED_NETWORK_H_

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "fsbsed/layers.h"

namespace fsbsed::nn {

enum class Mode { kTrain, kEval };

struct NetworkConfig {
  int input_height = 128;  // feature dim F
  int input_width = 17;    // patch frames T
  std::array<int, 3> channels = {64, 128, 64};
  double leaky_slope = 0.01;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  void Validate() const;
  // channels.back() * (F / 8) * (T / 8).
  int embedding_dim() const;
};

// One residual stage:
//   y = maxpool2x2(leaky_relu(bn(conv3x3(x))) + skip(x))
// skip is a biased 1x1 projection when channel counts differ, else identity.
// The 3x3 convolution has no bias; batch norm's shift plays that role.
template <typename S>
struct ConvBlock {
  Conv2d<S> conv;
  BatchNorm2d<S> bn;
  std::optional<Conv2d<S>> projection;
  S slope = S(0.01);

  struct Cache {
    Conv2dCache<S> conv;
    BatchNormCache<S> bn;
    FeatureMaps<S> bn_out;  // pre-activation
    Conv2dCache<S> projection;
    FeatureMaps<S> summed;  // pre-pool shape
    std::vector<int64_t> argmax;
  };

  ConvBlock() = default;
  ConvBlock(int in, int out, S slope, S bn_eps, S bn_momentum);

  FeatureMaps<S> ForwardTrain(const FeatureMaps<S>& x, Cache& cache);
  FeatureMaps<S> ForwardEval(const FeatureMaps<S>& x) const;
  FeatureMaps<S> Backward(const FeatureMaps<S>& dy, const Cache& cache);
};

// Three-block convolutional embedder mapping a dim x frames patch to a
// flat embedding. Value type: copies are independent networks.
template <typename S>
class EmbeddingNetwork {
 public:
  EmbeddingNetwork() = default;
  // Kaiming-uniform convolution weights, unit BN scale, zero shifts/biases.
  EmbeddingNetwork(const NetworkConfig& config, uint64_t seed);

  const NetworkConfig& config() const { return config_; }
  int embedding_dim() const { return config_.embedding_dim(); }

  // batch: 1 x B x F x T maps. Train mode caches activations for Backward
  // and updates running statistics; eval mode equals Embed.
  Mat<S> Forward(const FeatureMaps<S>& batch, Mode mode);
  // Eval mode, one sample at a time so results never depend on batch
  // composition. Read only; safe to call concurrently.
  Mat<S> Embed(const FeatureMaps<S>& batch) const;

  // Accumulates parameter gradients for d(loss)/d(embeddings) and returns
  // the gradient with respect to the input batch. Requires a preceding
  // train-mode Forward.
  FeatureMaps<S> Backward(const Mat<S>& grad_embeddings);
  bool has_cache() const { return cache_.has_value(); }
  void ClearCache() { cache_.reset(); }

  void ZeroGrad();
  // Learnable tensors in a fixed order.
  std::vector<Param<S>*> Parameters();
  std::vector<const Param<S>*> Parameters() const;
  // Running statistics, as (name, tensor) pairs in a fixed order.
  std::vector<std::pair<std::string, Mat<S>*>> Buffers();
  std::vector<std::pair<std::string, const Mat<S>*>> Buffers() const;
  size_t ParameterCount() const;
  bool AllFinite() const;

  // Same network in another precision. float, double and long double are
  // instantiated; gradient checks run in double against long double.
  template <typename T>
  EmbeddingNetwork<T> Cast() const;

  std::array<ConvBlock<S>, 3>& blocks() { return blocks_; }
  const std::array<ConvBlock<S>, 3>& blocks() const { return blocks_; }

 private:
  void CheckInput(const FeatureMaps<S>& batch) const;

  NetworkConfig config_;
  std::array<ConvBlock<S>, 3> blocks_;
  struct Cache {
    std::array<typename ConvBlock<S>::Cache, 3> blocks;
    int out_channels = 0;
    int out_height = 0;
    int out_width = 0;
  };
  std::optional<Cache> cache_;
};

}  // namespace fsbsed::nn

#endif  // FSBSED_NETWORK_H_
