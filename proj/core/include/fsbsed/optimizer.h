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

#ifndef FSBSED_OPTIMIZER_H_
#define FSBSED_OPTIMIZER_H_

#include <cstdint>
#include <vector>

#include "fsbsed/tensor.h"

namespace fsbsed::nn {

struct AdamConfig {
  double base_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay_gamma = 0.65;
  int decay_interval = 10;  // epochs

  void Validate() const;
};

// base_lr * decay_gamma ^ floor(epoch / decay_interval).
double ScheduledLearningRate(const AdamConfig& cfg, int epoch);

template <typename S>
struct AdamState {
  int64_t step = 0;
  std::vector<Mat<S>> m;
  std::vector<Mat<S>> v;
};

// Bias-corrected Adam. Touches only the tensors it is handed, so batch-norm
// running statistics are never modified.
template <typename S>
class Adam {
 public:
  explicit Adam(const AdamConfig& cfg = {}) : cfg_(cfg) { cfg_.Validate(); }

  const AdamConfig& config() const { return cfg_; }
  const AdamState<S>& state() const { return state_; }
  // Shapes must match the parameters passed to the next Step.
  void set_state(AdamState<S> state) { state_ = std::move(state); }

  // One update with the learning rate scheduled for `epoch`.
  void Step(const std::vector<Param<S>*>& params, int epoch);

 private:
  AdamConfig cfg_;
  AdamState<S> state_;
};

// Tracks validation accuracy per epoch. The best epoch is the first one that
// reaches the maximum; training stops once `patience` consecutive epochs fail
// to beat it.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience);

  // Records the next epoch's accuracy; returns true when training should stop.
  bool Update(double accuracy);

  int best_epoch() const { return best_epoch_; }
  double best_value() const { return best_value_; }
  int epochs() const { return static_cast<int>(history_.size()); }
  bool last_improved() const { return last_improved_; }
  bool stopped() const { return stopped_; }
  const std::vector<double>& history() const { return history_; }

 private:
  int patience_;
  int best_epoch_ = -1;
  double best_value_ = 0.0;
  int stale_ = 0;
  bool last_improved_ = false;
  bool stopped_ = false;
  std::vector<double> history_;
};

}  // namespace fsbsed::nn

#endif  // FSBSED_OPTIMIZER_H_
