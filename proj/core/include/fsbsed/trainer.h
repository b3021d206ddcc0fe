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

#ifndef FSBSED_TRAINER_H_
#define FSBSED_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "fsbsed/dataset.h"
#include "fsbsed/network.h"
#include "fsbsed/optimizer.h"
#include "fsbsed/protonet.h"

namespace fsbsed::protonet {

// Copies the listed patches into a 1 x B x dim x T network batch.
nn::FeatureMaps<float> GatherBatch(const data::SegmentPool& pool,
                                   const std::vector<size_t>& indices);

// Eval-mode embeddings of the listed patches, one row per index, computed in
// chunks on up to `threads` workers. Identical for any thread count.
Matrix EmbedPatches(const nn::EmbeddingNetwork<float>& net,
                    const data::SegmentPool& pool,
                    const std::vector<size_t>& indices, int threads);

struct TrainConfig {
  data::EpisodeShape shape;        // n_way is capped at the eligible classes
  int episodes_per_epoch = 100;
  int max_epochs = 50;
  int validation_episodes = 20;
  int patience = 10;
  nn::AdamConfig adam;
  nn::NetworkConfig network;       // input shape is overwritten from the pools
  Distance distance = Distance::kSquaredEuclidean;
  uint64_t seed = 0;
  int threads = 1;

  void Validate() const;
};

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;      // mean per episode
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  bool best = false;
};

struct TrainResult {
  nn::EmbeddingNetwork<float> network;  // weights of the best epoch
  std::vector<EpochLog> log;
  int best_epoch = -1;
  int episodes = 0;
  int n_way = 0;
  bool validated_on_train = false;  // no validation classes were eligible
};

// Statistics of one optimisation step.
struct StepStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Forward in train mode over support, negative support and query of one
// episode as a single batch, backward through the episode loss, Adam step.
StepStats TrainStep(nn::EmbeddingNetwork<float>& net, nn::Adam<float>& opt,
                    const data::ClassPools& pools, const data::Episode& episode,
                    Distance distance, int epoch);

// Loss and accuracy of an episode with eval-mode embeddings.
StepStats EvaluateEpisode(const nn::EmbeddingNetwork<float>& net,
                          const data::ClassPools& pools,
                          const data::Episode& episode, Distance distance,
                          int threads);

// Episodic training with per-epoch validation and early stopping on
// validation accuracy. Throws CapacityError when no class can fill an
// episode.
TrainResult TrainProtoNet(const data::CorpusPools& pools, const TrainConfig& cfg,
                          const std::function<void(const EpochLog&)>& on_epoch = {});

// CSV with one row per epoch; contains no timing so reruns compare equal.
void WriteTrainingLog(const std::filesystem::path& path,
                      const std::vector<EpochLog>& log);

}  // namespace fsbsed::protonet

#endif  // FSBSED_TRAINER_H_
