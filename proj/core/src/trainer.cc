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

#include "fsbsed/trainer.h"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fsbsed/error.h"
#include "fsbsed/parallel.h"
#include "fsbsed/seed.h"

namespace fsbsed::protonet {
namespace {

constexpr size_t kEmbedChunk = 32;

std::vector<size_t> Patches(const std::vector<data::EpisodeItem>& items) {
  std::vector<size_t> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.patch);
  return out;
}

std::vector<int> Labels(const std::vector<data::EpisodeItem>& items) {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.label);
  return out;
}

data::EpisodeShape CappedShape(const data::ClassPools& pools,
                               data::EpisodeShape shape) {
  const int eligible = static_cast<int>(data::EligibleClasses(pools, shape).size());
  shape.n_way = std::min(shape.n_way, eligible);
  return shape;
}

}  // namespace

nn::FeatureMaps<float> GatherBatch(const data::SegmentPool& pool,
                                   const std::vector<size_t>& indices) {
  nn::FeatureMaps<float> batch(1, static_cast<int>(indices.size()), pool.dim(),
                               pool.patch_frames());
  const size_t plane = batch.plane();
  for (size_t i = 0; i < indices.size(); ++i) {
    pool.WriteFeatureMajor(indices[i], batch.data.data() + i * plane);
  }
  return batch;
}

Matrix EmbedPatches(const nn::EmbeddingNetwork<float>& net,
                    const data::SegmentPool& pool,
                    const std::vector<size_t>& indices, int threads) {
  Matrix out(static_cast<Eigen::Index>(indices.size()), net.embedding_dim());
  const size_t chunks = (indices.size() + kEmbedChunk - 1) / kEmbedChunk;
  ParallelFor(chunks, threads, [&](size_t c) {
    const size_t begin = c * kEmbedChunk;
    const size_t end = std::min(indices.size(), begin + kEmbedChunk);
    const std::vector<size_t> part(indices.begin() + begin, indices.begin() + end);
    const nn::Mat<float> emb = net.Embed(GatherBatch(pool, part));
    out.middleRows(static_cast<Eigen::Index>(begin), emb.rows()) =
        emb.cast<double>();
  });
  return out;
}

void TrainConfig::Validate() const {
  if (shape.n_way < 1 || shape.k_shot < 1 || shape.q_query < 1) {
    throw UsageError("train: n_way, k_shot and q_query must be >= 1");
  }
  if (episodes_per_epoch < 1) throw UsageError("train: episodes_per_epoch must be >= 1");
  if (max_epochs < 1) throw UsageError("train: max_epochs must be >= 1");
  if (validation_episodes < 1) throw UsageError("train: validation_episodes must be >= 1");
  if (patience < 1) throw UsageError("train: patience must be >= 1");
  adam.Validate();
}

StepStats TrainStep(nn::EmbeddingNetwork<float>& net, nn::Adam<float>& opt,
                    const data::ClassPools& pools, const data::Episode& episode,
                    Distance distance, int epoch) {
  std::vector<size_t> idx = Patches(episode.support);
  const std::vector<size_t> neg = Patches(episode.negative_support);
  const std::vector<size_t> qry = Patches(episode.query);
  idx.insert(idx.end(), neg.begin(), neg.end());
  idx.insert(idx.end(), qry.begin(), qry.end());

  const Matrix emb = net.Forward(GatherBatch(pools.pool, idx), nn::Mode::kTrain)
                         .cast<double>();
  const Eigen::Index ns = static_cast<Eigen::Index>(episode.support.size());
  const Eigen::Index nn_ = static_cast<Eigen::Index>(neg.size());
  const Eigen::Index nq = static_cast<Eigen::Index>(qry.size());
  const LossResult res =
      EpisodeLoss(emb.topRows(ns), emb.middleRows(ns, nn_), emb.bottomRows(nq),
                  Labels(episode.query), episode.n_way, distance);

  Matrix grad(emb.rows(), emb.cols());
  grad.topRows(ns) = res.grad_support;
  grad.middleRows(ns, nn_) = res.grad_negative;
  grad.bottomRows(nq) = res.grad_query;
  net.ZeroGrad();
  net.Backward(grad.cast<float>());
  net.ClearCache();
  opt.Step(net.Parameters(), epoch);
  if (!net.AllFinite()) {
    throw InternalError(fmt::format(
        "train: non-finite parameters after step (epoch {}, loss {})", epoch,
        res.loss));
  }
  return {res.loss, res.labelled ? double(res.correct) / res.labelled : 0.0};
}

StepStats EvaluateEpisode(const nn::EmbeddingNetwork<float>& net,
                          const data::ClassPools& pools,
                          const data::Episode& episode, Distance distance,
                          int threads) {
  const Matrix sup = EmbedPatches(net, pools.pool, Patches(episode.support), threads);
  const Matrix neg =
      EmbedPatches(net, pools.pool, Patches(episode.negative_support), threads);
  const Matrix qry = EmbedPatches(net, pools.pool, Patches(episode.query), threads);
  const LossResult res =
      EpisodeLoss(sup, neg, qry, Labels(episode.query), episode.n_way, distance);
  return {res.loss, res.labelled ? double(res.correct) / res.labelled : 0.0};
}

TrainResult TrainProtoNet(const data::CorpusPools& pools, const TrainConfig& cfg,
                          const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.Validate();
  const data::EpisodeShape shape = CappedShape(pools.train, cfg.shape);
  if (shape.n_way < 1) {
    throw data::CapacityError(fmt::format(
        "train: no class has {} positive and {} negative patches",
        cfg.shape.k_shot + cfg.shape.q_query, cfg.shape.k_shot));
  }
  if (shape.n_way < cfg.shape.n_way) {
    spdlog::warn("train: only {} classes can fill an episode; using {}-way",
                 shape.n_way, shape.n_way);
  }
  TrainResult result;
  result.n_way = shape.n_way;

  const data::ClassPools* val_pools = &pools.validation;
  data::EpisodeShape val_shape = CappedShape(pools.validation, cfg.shape);
  if (val_shape.n_way < 1) {
    spdlog::warn("train: no eligible validation classes; validating on training pools");
    val_pools = &pools.train;
    val_shape = shape;
    result.validated_on_train = true;
  }

  nn::NetworkConfig net_cfg = cfg.network;
  net_cfg.input_height = pools.train.pool.dim();
  net_cfg.input_width = pools.train.pool.patch_frames();
  nn::EmbeddingNetwork<float> net(net_cfg, DeriveSeed(cfg.seed, "init"));
  nn::Adam<float> opt(cfg.adam);
  nn::EarlyStopper stopper(cfg.patience);
  result.network = net;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.learning_rate = nn::ScheduledLearningRate(cfg.adam, epoch);
    for (int e = 0; e < cfg.episodes_per_epoch; ++e) {
      const data::Episode ep = data::SampleEpisode(
          pools.train, shape,
          DeriveSeed(cfg.seed, "train", static_cast<uint64_t>(epoch),
                     static_cast<uint64_t>(e)));
      const StepStats s = TrainStep(net, opt, pools.train, ep, cfg.distance, epoch);
      log.train_loss += s.loss;
      log.train_accuracy += s.accuracy;
      ++result.episodes;
    }
    log.train_loss /= cfg.episodes_per_epoch;
    log.train_accuracy /= cfg.episodes_per_epoch;

    for (int v = 0; v < cfg.validation_episodes; ++v) {
      const data::Episode ep = data::SampleEpisode(
          *val_pools, val_shape,
          DeriveSeed(cfg.seed, "validation", static_cast<uint64_t>(v)));
      const StepStats s = EvaluateEpisode(net, *val_pools, ep, cfg.distance, cfg.threads);
      log.val_loss += s.loss;
      log.val_accuracy += s.accuracy;
    }
    log.val_loss /= cfg.validation_episodes;
    log.val_accuracy /= cfg.validation_episodes;

    const bool stop = stopper.Update(log.val_accuracy);
    log.best = stopper.last_improved();
    if (log.best) {
      result.network = net;
      result.best_epoch = epoch;
    }
    result.log.push_back(log);
    spdlog::info("epoch {:3d} lr {:.6f} loss {:.4f} acc {:.3f} | val loss {:.4f} acc {:.3f}{}",
                 epoch, log.learning_rate, log.train_loss, log.train_accuracy,
                 log.val_loss, log.val_accuracy, log.best ? " *" : "");
    if (on_epoch) on_epoch(log);
    if (stop) break;
  }
  return result;
}

void WriteTrainingLog(const std::filesystem::path& path,
                      const std::vector<EpochLog>& log) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("{}: cannot write training log", path.string()));
  out << "epoch,learning_rate,train_loss,train_accuracy,val_loss,val_accuracy,best\n";
  for (const EpochLog& e : log) {
    out << fmt::format("{},{:.8g},{:.8f},{:.6f},{:.8f},{:.6f},{}\n", e.epoch,
                       e.learning_rate, e.train_loss, e.train_accuracy, e.val_loss,
                       e.val_accuracy, e.best ? 1 : 0);
  }
}

}  // namespace fsbsed::protonet
