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

#ifndef FSBSED_LAYERS_H_
#define FSBSED_LAYERS_H_

#include <cstdint>
#include <vector>

#include "fsbsed/tensor.h"

// Layers hold parameters only. Forward passes that will be differentiated
// write what the backward pass needs into a caller-owned cache, so the
// inference path is const and safe to share between threads.

namespace fsbsed::nn {

template <typename S>
struct Conv2dCache {
  FeatureMaps<S> input;
  Mat<S> columns;  // im2col of the input; empty for 1x1 kernels
};

// Stride 1, "same" zero padding, odd square kernel.
template <typename S>
struct Conv2d {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  bool has_bias = false;
  Param<S> weight;  // out x (in * kernel * kernel)
  Param<S> bias;    // 1 x out, when has_bias

  Conv2d() = default;
  Conv2d(int in, int out, int k, bool with_bias);

  FeatureMaps<S> Forward(const FeatureMaps<S>& x, Conv2dCache<S>* cache) const;
  // Accumulates weight and bias gradients; returns the input gradient.
  FeatureMaps<S> Backward(const FeatureMaps<S>& dy, const Conv2dCache<S>& cache);
};

template <typename S>
void Im2Col(const FeatureMaps<S>& x, int kernel, Mat<S>& columns);
template <typename S>
void Col2Im(const Mat<S>& columns, int kernel, FeatureMaps<S>& dx);

template <typename S>
struct BatchNormCache {
  Mat<S> normalized;  // x_hat, channels x (batch * plane)
  Eigen::Array<S, Eigen::Dynamic, 1> inv_std;
};

template <typename S>
struct BatchNorm2d {
  int channels = 0;
  S eps = S(1e-5);
  S momentum = S(0.1);
  Param<S> gamma;  // 1 x channels
  Param<S> beta;   // 1 x channels
  Mat<S> running_mean;  // 1 x channels
  Mat<S> running_var;   // 1 x channels

  BatchNorm2d() = default;
  BatchNorm2d(int c, S eps, S momentum);

  // Training mode: normalises with batch statistics (biased variance) and
  // updates the running statistics (unbiased variance).
  FeatureMaps<S> ForwardTrain(const FeatureMaps<S>& x, BatchNormCache<S>& cache);
  FeatureMaps<S> ForwardEval(const FeatureMaps<S>& x) const;
  FeatureMaps<S> Backward(const FeatureMaps<S>& dy, const BatchNormCache<S>& cache);
};

template <typename S>
FeatureMaps<S> LeakyRelu(const FeatureMaps<S>& x, S slope);
// dy scaled by the derivative at the forward input x (slope for x <= 0).
template <typename S>
FeatureMaps<S> LeakyReluBackward(const FeatureMaps<S>& dy,
                                 const FeatureMaps<S>& x, S slope);

// 2x2 max pooling, stride 2, trailing odd row/column dropped. `argmax`
// receives the flat input index of each output's winner (first in scan
// order on ties).
template <typename S>
FeatureMaps<S> MaxPool2x2(const FeatureMaps<S>& x, std::vector<int64_t>* argmax);
template <typename S>
FeatureMaps<S> MaxPool2x2Backward(const FeatureMaps<S>& dy,
                                  const std::vector<int64_t>& argmax,
                                  const FeatureMaps<S>& input_shape);

// (C, N, H, W) maps to N x (C * H * W) rows, channel-major inside a row.
template <typename S>
Mat<S> Flatten(const FeatureMaps<S>& x);
template <typename S>
FeatureMaps<S> Unflatten(const Mat<S>& rows, int channels, int height, int width);

}  // namespace fsbsed::nn

#endif  // FSBSED_LAYERS_H_
