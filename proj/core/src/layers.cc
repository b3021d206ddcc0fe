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

#include "fsbsed/layers.h"

#include <algorithm>

#include <fmt/format.h>

#include "fsbsed/error.h"

namespace fsbsed::nn {

template <typename S>
void Im2Col(const FeatureMaps<S>& x, int kernel, Mat<S>& columns) {
  const int pad = kernel / 2;
  const int h = x.height;
  const int w = x.width;
  const Eigen::Index cols = static_cast<Eigen::Index>(x.batch) * h * w;
  columns.resize(static_cast<Eigen::Index>(x.channels) * kernel * kernel, cols);
  for (int c = 0; c < x.channels; ++c) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        S* dst = columns.row((c * kernel + ky) * kernel + kx).data();
        const int dx = kx - pad;
        const int x_lo = std::max(0, -dx);
        const int x_hi = std::min(w, w - dx);
        for (int n = 0; n < x.batch; ++n) {
          const S* plane = x.data.data() + (static_cast<size_t>(c) * x.batch + n) * h * w;
          for (int y = 0; y < h; ++y) {
            S* out = dst + (static_cast<size_t>(n) * h + y) * w;
            const int sy = y + ky - pad;
            if (sy < 0 || sy >= h) {
              std::fill(out, out + w, S(0));
              continue;
            }
            const S* src = plane + static_cast<size_t>(sy) * w;
            std::fill(out, out + x_lo, S(0));
            for (int xx = x_lo; xx < x_hi; ++xx) out[xx] = src[xx + dx];
            std::fill(out + std::max(x_lo, x_hi), out + w, S(0));
          }
        }
      }
    }
  }
}

template <typename S>
void Col2Im(const Mat<S>& columns, int kernel, FeatureMaps<S>& dx) {
  const int pad = kernel / 2;
  const int h = dx.height;
  const int w = dx.width;
  std::fill(dx.data.begin(), dx.data.end(), S(0));
  for (int c = 0; c < dx.channels; ++c) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const S* src = columns.row((c * kernel + ky) * kernel + kx).data();
        const int off = kx - pad;
        const int x_lo = std::max(0, -off);
        const int x_hi = std::min(w, w - off);
        for (int n = 0; n < dx.batch; ++n) {
          S* plane = dx.data.data() + (static_cast<size_t>(c) * dx.batch + n) * h * w;
          for (int y = 0; y < h; ++y) {
            const int sy = y + ky - pad;
            if (sy < 0 || sy >= h) continue;
            const S* in = src + (static_cast<size_t>(n) * h + y) * w;
            S* out = plane + static_cast<size_t>(sy) * w;
            for (int xx = x_lo; xx < x_hi; ++xx) out[xx + off] += in[xx];
          }
        }
      }
    }
  }
}

template <typename S>
Conv2d<S>::Conv2d(int in, int out, int k, bool with_bias)
    : in_channels(in), out_channels(out), kernel(k), has_bias(with_bias) {
  if (k < 1 || k % 2 == 0) {
    throw UsageError(fmt::format("conv2d: kernel {} must be odd", k));
  }
  weight.Resize(out, static_cast<Eigen::Index>(in) * k * k);
  if (has_bias) bias.Resize(1, out);
}

template <typename S>
FeatureMaps<S> Conv2d<S>::Forward(const FeatureMaps<S>& x,
                                  Conv2dCache<S>* cache) const {
  if (x.channels != in_channels) {
    throw UsageError(fmt::format("conv2d: input has {} channels, expected {}",
                                 x.channels, in_channels));
  }
  FeatureMaps<S> y(out_channels, x.batch, x.height, x.width);
  if (kernel == 1) {
    y.matrix().noalias() = weight.value * x.matrix();
  } else {
    Mat<S> local;
    Mat<S>& columns = cache ? cache->columns : local;
    Im2Col(x, kernel, columns);
    y.matrix().noalias() = weight.value * columns;
  }
  if (has_bias) {
    y.matrix().colwise() += bias.value.row(0).transpose();
  }
  if (cache) cache->input = x;
  return y;
}

template <typename S>
FeatureMaps<S> Conv2d<S>::Backward(const FeatureMaps<S>& dy,
                                   const Conv2dCache<S>& cache) {
  const FeatureMaps<S>& x = cache.input;
  FeatureMaps<S> dx(in_channels, x.batch, x.height, x.width);
  const auto g = dy.matrix();
  if (kernel == 1) {
    weight.grad.noalias() += g * x.matrix().transpose();
    dx.matrix().noalias() = weight.value.transpose() * g;
  } else {
    weight.grad.noalias() += g * cache.columns.transpose();
    Mat<S> dcol = weight.value.transpose() * g;
    Col2Im(dcol, kernel, dx);
  }
  if (has_bias) bias.grad.row(0) += g.rowwise().sum().transpose();
  return dx;
}

template <typename S>
BatchNorm2d<S>::BatchNorm2d(int c, S eps_in, S momentum_in)
    : channels(c), eps(eps_in), momentum(momentum_in) {
  gamma.Resize(1, c);
  gamma.value.setOnes();
  beta.Resize(1, c);
  running_mean = Mat<S>::Zero(1, c);
  running_var = Mat<S>::Ones(1, c);
}

template <typename S>
FeatureMaps<S> BatchNorm2d<S>::ForwardTrain(const FeatureMaps<S>& x,
                                            BatchNormCache<S>& cache) {
  const auto in = x.matrix();
  const Eigen::Index m = in.cols();
  if (m < 2) {
    throw UsageError("batch norm: training needs more than one value per channel");
  }
  const Eigen::Array<S, Eigen::Dynamic, 1> mean = in.rowwise().mean().array();
  cache.normalized = in.colwise() - mean.matrix();
  const Eigen::Array<S, Eigen::Dynamic, 1> var =
      cache.normalized.array().square().rowwise().mean();
  cache.inv_std = (var + eps).rsqrt();
  cache.normalized.array().colwise() *= cache.inv_std;

  FeatureMaps<S> y(x.channels, x.batch, x.height, x.width);
  auto out = y.matrix();
  out = cache.normalized;
  out.array().colwise() *= gamma.value.row(0).transpose().array();
  out.colwise() += beta.value.row(0).transpose();

  const S unbias = static_cast<S>(m) / static_cast<S>(m - 1);
  running_mean.row(0) =
      (S(1) - momentum) * running_mean.row(0) + momentum * mean.matrix().transpose();
  running_var.row(0) = (S(1) - momentum) * running_var.row(0) +
                       momentum * unbias * var.matrix().transpose();
  return y;
}

template <typename S>
FeatureMaps<S> BatchNorm2d<S>::ForwardEval(const FeatureMaps<S>& x) const {
  const Eigen::Array<S, Eigen::Dynamic, 1> scale =
      gamma.value.row(0).transpose().array() *
      (running_var.row(0).transpose().array() + eps).rsqrt();
  const Eigen::Array<S, Eigen::Dynamic, 1> shift =
      beta.value.row(0).transpose().array() -
      running_mean.row(0).transpose().array() * scale;
  FeatureMaps<S> y(x.channels, x.batch, x.height, x.width);
  auto out = y.matrix();
  out = x.matrix();
  out.array().colwise() *= scale;
  out.array().colwise() += shift;
  return y;
}

template <typename S>
FeatureMaps<S> BatchNorm2d<S>::Backward(const FeatureMaps<S>& dy,
                                        const BatchNormCache<S>& cache) {
  const auto g = dy.matrix();
  const S m = static_cast<S>(g.cols());
  const Eigen::Array<S, Eigen::Dynamic, 1> dbeta = g.rowwise().sum().array();
  const Eigen::Array<S, Eigen::Dynamic, 1> dgamma =
      (g.array() * cache.normalized.array()).rowwise().sum();
  beta.grad.row(0) += dbeta.matrix().transpose();
  gamma.grad.row(0) += dgamma.matrix().transpose();

  FeatureMaps<S> dx(dy.channels, dy.batch, dy.height, dy.width);
  auto out = dx.matrix();
  out = cache.normalized;
  out.array().colwise() *= -dgamma;
  out += m * g;
  out.colwise() -= dbeta.matrix();
  const Eigen::Array<S, Eigen::Dynamic, 1> scale =
      gamma.value.row(0).transpose().array() * cache.inv_std / m;
  out.array().colwise() *= scale;
  return dx;
}

template <typename S>
FeatureMaps<S> LeakyRelu(const FeatureMaps<S>& x, S slope) {
  FeatureMaps<S> y = x;
  for (S& v : y.data) {
    if (v <= S(0)) v *= slope;
  }
  return y;
}

template <typename S>
FeatureMaps<S> LeakyReluBackward(const FeatureMaps<S>& dy,
                                 const FeatureMaps<S>& x, S slope) {
  FeatureMaps<S> dx = dy;
  for (size_t i = 0; i < dx.data.size(); ++i) {
    if (x.data[i] <= S(0)) dx.data[i] *= slope;
  }
  return dx;
}

template <typename S>
FeatureMaps<S> MaxPool2x2(const FeatureMaps<S>& x,
                          std::vector<int64_t>* argmax) {
  const int oh = x.height / 2;
  const int ow = x.width / 2;
  if (oh == 0 || ow == 0) {
    throw UsageError(fmt::format("max pool: {}x{} input is too small",
                                 x.height, x.width));
  }
  FeatureMaps<S> y(x.channels, x.batch, oh, ow);
  if (argmax) argmax->resize(y.size());
  const size_t planes = static_cast<size_t>(x.channels) * x.batch;
  for (size_t p = 0; p < planes; ++p) {
    const int64_t in_base = static_cast<int64_t>(p) * x.height * x.width;
    const size_t out_base = p * static_cast<size_t>(oh) * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        int64_t best = in_base + static_cast<int64_t>(2 * oy) * x.width + 2 * ox;
        S best_value = x.data[best];
        const int64_t candidates[3] = {best + 1, best + x.width,
                                       best + x.width + 1};
        for (int64_t c : candidates) {
          if (x.data[c] > best_value) {
            best_value = x.data[c];
            best = c;
          }
        }
        const size_t o = out_base + static_cast<size_t>(oy) * ow + ox;
        y.data[o] = best_value;
        if (argmax) (*argmax)[o] = best;
      }
    }
  }
  return y;
}

template <typename S>
FeatureMaps<S> MaxPool2x2Backward(const FeatureMaps<S>& dy,
                                  const std::vector<int64_t>& argmax,
                                  const FeatureMaps<S>& input_shape) {
  FeatureMaps<S> dx(input_shape.channels, input_shape.batch,
                    input_shape.height, input_shape.width);
  for (size_t o = 0; o < dy.data.size(); ++o) dx.data[argmax[o]] += dy.data[o];
  return dx;
}

template <typename S>
Mat<S> Flatten(const FeatureMaps<S>& x) {
  const size_t plane = x.plane();
  Mat<S> rows(x.batch, static_cast<Eigen::Index>(x.channels * plane));
  for (int c = 0; c < x.channels; ++c) {
    for (int n = 0; n < x.batch; ++n) {
      const S* src = x.data.data() + (static_cast<size_t>(c) * x.batch + n) * plane;
      std::copy(src, src + plane, rows.row(n).data() + c * plane);
    }
  }
  return rows;
}

template <typename S>
FeatureMaps<S> Unflatten(const Mat<S>& rows, int channels, int height,
                         int width) {
  FeatureMaps<S> x(channels, static_cast<int>(rows.rows()), height, width);
  const size_t plane = x.plane();
  if (static_cast<size_t>(rows.cols()) != channels * plane) {
    throw InternalError("unflatten: row width does not match shape");
  }
  for (int c = 0; c < channels; ++c) {
    for (int n = 0; n < x.batch; ++n) {
      const S* src = rows.row(n).data() + c * plane;
      std::copy(src, src + plane,
                x.data.data() + (static_cast<size_t>(c) * x.batch + n) * plane);
    }
  }
  return x;
}

#define FSBSED_INSTANTIATE_LAYERS(S)                                          \
  template void Im2Col<S>(const FeatureMaps<S>&, int, Mat<S>&);               \
  template void Col2Im<S>(const Mat<S>&, int, FeatureMaps<S>&);               \
  template struct Conv2d<S>;                                                  \
  template struct BatchNorm2d<S>;                                             \
  template FeatureMaps<S> LeakyRelu<S>(const FeatureMaps<S>&, S);             \
  template FeatureMaps<S> LeakyReluBackward<S>(const FeatureMaps<S>&,         \
                                               const FeatureMaps<S>&, S);     \
  template FeatureMaps<S> MaxPool2x2<S>(const FeatureMaps<S>&,                \
                                        std::vector<int64_t>*);               \
  template FeatureMaps<S> MaxPool2x2Backward<S>(                              \
      const FeatureMaps<S>&, const std::vector<int64_t>&,                     \
      const FeatureMaps<S>&);                                                 \
  template Mat<S> Flatten<S>(const FeatureMaps<S>&);                          \
  template FeatureMaps<S> Unflatten<S>(const Mat<S>&, int, int, int);

FSBSED_INSTANTIATE_LAYERS(float)
FSBSED_INSTANTIATE_LAYERS(double)
// Extended precision serves finite-difference oracles in tests.
FSBSED_INSTANTIATE_LAYERS(long double)

#undef FSBSED_INSTANTIATE_LAYERS

}  // namespace fsbsed::nn
