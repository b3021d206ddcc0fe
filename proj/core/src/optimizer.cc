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

#include "fsbsed/optimizer.h"

#include <cmath>

#include "fsbsed/error.h"

namespace fsbsed::nn {

void AdamConfig::Validate() const {
  if (!(base_lr > 0.0)) throw UsageError("optimizer: base_lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw UsageError("optimizer: betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw UsageError("optimizer: eps must be > 0");
  if (!(decay_gamma > 0.0)) throw UsageError("optimizer: decay_gamma must be > 0");
  if (decay_interval < 1) throw UsageError("optimizer: decay_interval must be >= 1");
}

double ScheduledLearningRate(const AdamConfig& cfg, int epoch) {
  if (epoch < 0) throw UsageError("optimizer: negative epoch");
  return cfg.base_lr * std::pow(cfg.decay_gamma, epoch / cfg.decay_interval);
}

template <typename S>
void Adam<S>::Step(const std::vector<Param<S>*>& params, int epoch) {
  if (state_.m.empty()) {
    for (const Param<S>* p : params) {
      state_.m.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      state_.v.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state_.m.size() != params.size()) {
    throw InternalError("optimizer: parameter list changed between steps");
  }
  ++state_.step;
  const double lr = ScheduledLearningRate(cfg_, epoch);
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(state_.step));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(state_.step));
  const S b1 = static_cast<S>(cfg_.beta1);
  const S b2 = static_cast<S>(cfg_.beta2);
  const S step_size = static_cast<S>(lr / c1);
  const S inv_sqrt_c2 = static_cast<S>(1.0 / std::sqrt(c2));
  const S eps = static_cast<S>(cfg_.eps);
  for (size_t i = 0; i < params.size(); ++i) {
    Param<S>& p = *params[i];
    if (state_.m[i].rows() != p.value.rows() || state_.m[i].cols() != p.value.cols()) {
      throw InternalError("optimizer: moment shape mismatch for " + p.name);
    }
    auto g = p.grad.array();
    auto m = state_.m[i].array();
    auto v = state_.v[i].array();
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.square();
    p.value.array() -= step_size * m / (v.sqrt() * inv_sqrt_c2 + eps);
  }
}

EarlyStopper::EarlyStopper(int patience) : patience_(patience) {
  if (patience < 1) throw UsageError("early stopping: patience must be >= 1");
}

bool EarlyStopper::Update(double accuracy) {
  history_.push_back(accuracy);
  last_improved_ = best_epoch_ < 0 || accuracy > best_value_;
  if (last_improved_) {
    best_epoch_ = epochs() - 1;
    best_value_ = accuracy;
    stale_ = 0;
  } else {
    ++stale_;
  }
  stopped_ = stale_ >= patience_;
  return stopped_;
}

template class Adam<float>;
template class Adam<double>;

}  // namespace fsbsed::nn
