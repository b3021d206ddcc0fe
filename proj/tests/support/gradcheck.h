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

#ifndef FSBSED_TESTS_SUPPORT_GRADCHECK_H_
#define FSBSED_TESTS_SUPPORT_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <random>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

// Central finite differences over every element of a tensor.

namespace fsbsed::testing {

inline constexpr double kFiniteDifferenceStep = 1e-5;

template <typename T, typename Alloc>
void FillNormal(std::vector<T, Alloc>& c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  for (T& v : c) v = static_cast<T>(n(rng));
}

template <typename Derived>
void FillNormal(Eigen::PlainObjectBase<Derived>& m, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<typename Derived::Scalar>(n(rng));
  }
}

// d loss / d values[i] for every i; values is perturbed in place and restored.
// The arithmetic runs in the element type of `values`, so a long double copy
// of a computation gives an oracle with far less roundoff than double.
template <typename Values, typename Loss>
std::vector<double> GradCheck(Values& values, Loss&& loss,
                              double h = kFiniteDifferenceStep) {
  auto* data = values.data();
  using T = std::remove_reference_t<decltype(*data)>;
  const T step = static_cast<T>(h);
  const size_t n = static_cast<size_t>(values.size());
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    const T keep = data[i];
    data[i] = keep + step;
    const T up = static_cast<T>(loss());
    data[i] = keep - step;
    const T down = static_cast<T>(loss());
    data[i] = keep;
    out[i] = static_cast<double>((up - down) / (2 * step));
  }
  return out;
}

// GradCheck for piecewise-smooth losses. `pattern()` returns the branch
// choices (activation signs, pooling winners) of the latest loss() call. An
// element whose +-h probes take different branches than the unperturbed point
// straddles a kink, where a central difference is no derivative oracle; its
// entry is NaN and MaxRelativeError skips it.
template <typename Values, typename Loss, typename Pattern>
std::vector<double> GradCheckPiecewise(Values& values, Loss&& loss, Pattern&& pattern,
                                       double h = kFiniteDifferenceStep) {
  auto* data = values.data();
  using T = std::remove_reference_t<decltype(*data)>;
  const T step = static_cast<T>(h);
  loss();
  const auto base = pattern();
  const size_t n = static_cast<size_t>(values.size());
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    const T keep = data[i];
    data[i] = keep + step;
    const T up = static_cast<T>(loss());
    bool kink = pattern() != base;
    data[i] = keep - step;
    const T down = static_cast<T>(loss());
    kink = kink || pattern() != base;
    data[i] = keep;
    out[i] = kink ? std::nan("") : static_cast<double>((up - down) / (2 * step));
  }
  return out;
}

inline size_t CountSkipped(const std::vector<double>& fd) {
  return static_cast<size_t>(
      std::count_if(fd.begin(), fd.end(), [](double v) { return std::isnan(v); }));
}

// max_i |analytic - fd| / (|fd| + 1e-8) over the entries that are not NaN.
template <typename Analytic>
double MaxRelativeError(const std::vector<double>& fd, const Analytic& analytic) {
  const double* a = analytic.data();
  double worst = 0.0;
  for (size_t i = 0; i < fd.size(); ++i) {
    if (std::isnan(fd[i])) continue;
    worst = std::max(worst, std::abs(a[i] - fd[i]) / (std::abs(fd[i]) + 1e-8));
  }
  return worst;
}

}  // namespace fsbsed::testing

#endif  // FSBSED_TESTS_SUPPORT_GRADCHECK_H_
