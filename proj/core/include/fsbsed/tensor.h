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

#ifndef FSBSED_TENSOR_H_
#define FSBSED_TENSOR_H_

#include <string>
#include <vector>

#include <Eigen/Core>

namespace fsbsed::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
using MatMap = Eigen::Map<Mat<S>>;

template <typename S>
using ConstMatMap = Eigen::Map<const Mat<S>>;

// Buffers viewed through MatMap start on Eigen's packet alignment. With a
// plain vector the vectorised reductions peel a heap-address dependent head,
// so identical runs could differ in the last bits.
template <typename S>
using AlignedVector = std::vector<S, Eigen::aligned_allocator<S>>;

// Activations stored channel major: element (c, n, y, x) lives at
// ((c * batch + n) * height + y) * width + x. Viewed as a matrix this is
// channels x (batch * height * width), so a convolution over the whole batch
// is one GEMM and batch-norm statistics are row reductions. With a single
// channel the layout coincides with batch x height x width.
template <typename S>
struct FeatureMaps {
  int channels = 0;
  int batch = 0;
  int height = 0;
  int width = 0;
  AlignedVector<S> data;

  FeatureMaps() = default;
  FeatureMaps(int c, int n, int h, int w)
      : channels(c), batch(n), height(h), width(w),
        data(static_cast<size_t>(c) * n * h * w, S(0)) {}

  size_t plane() const { return static_cast<size_t>(height) * width; }
  size_t size() const { return data.size(); }

  S& at(int c, int n, int y, int x) {
    return data[((static_cast<size_t>(c) * batch + n) * height + y) * width + x];
  }
  S at(int c, int n, int y, int x) const {
    return data[((static_cast<size_t>(c) * batch + n) * height + y) * width + x];
  }

  MatMap<S> matrix() {
    return MatMap<S>(data.data(), channels, static_cast<Eigen::Index>(batch) * plane());
  }
  ConstMatMap<S> matrix() const {
    return ConstMatMap<S>(data.data(), channels,
                          static_cast<Eigen::Index>(batch) * plane());
  }

  bool SameShape(const FeatureMaps& o) const {
    return channels == o.channels && batch == o.batch && height == o.height &&
           width == o.width;
  }
};

// A learnable tensor and its accumulated gradient.
template <typename S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;

  void Resize(Eigen::Index rows, Eigen::Index cols) {
    value = Mat<S>::Zero(rows, cols);
    grad = Mat<S>::Zero(rows, cols);
  }
};

}  // namespace fsbsed::nn

#endif  // FSBSED_TENSOR_H_
