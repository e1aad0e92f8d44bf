// Copyright 2026 The pmqa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PMQA_GAN_TRAINER_HPP_
#define PMQA_GAN_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pmqa/ad/adam.hpp"
#include "pmqa/ad/checkpoint.hpp"
#include "pmqa/gan/config.hpp"
#include "pmqa/gan/data.hpp"
#include "pmqa/gan/model.hpp"

namespace pmqa::gan {

struct LossRecord {
  std::vector<double> d_losses;  // one per discriminator update
  double g_loss = 0.0;
};

// Alternating hinge-loss updates: d_steps_per_g discriminator updates, each
// on a fresh real sub-batch and fresh noise, then one generator update.
template <typename T>
class GanTrainer {
 public:
  GanTrainer(const GanConfig& config, Generator<T>& generator, Discriminator<T>& discriminator);

  // `real` holds d_steps_per_g * batch_size patches [.., 1, bands, frames],
  // `genres` one label per patch. Throws TrainingHalted on a non-finite loss
  // or gradient.
  LossRecord train_step(const Tensor<T>& real, std::span<const int> genres);

  std::int64_t d_steps() const { return d_steps_; }
  std::int64_t g_steps() const { return g_steps_; }
  void set_counters(std::int64_t d_steps, std::int64_t g_steps);
  ad::AdamState<T>& generator_optimizer() { return g_opt_; }
  ad::AdamState<T>& discriminator_optimizer() { return d_opt_; }

 private:
  GanConfig config_;
  Generator<T>& g_;
  Discriminator<T>& d_;
  std::vector<Tensor<T>> g_params_;
  std::vector<Tensor<T>> d_params_;
  ad::AdamState<T> g_opt_;
  ad::AdamState<T> d_opt_;
  ad::Rng rng_;
  std::int64_t d_steps_ = 0;
  std::int64_t g_steps_ = 0;
};

// Parameters and buffers of both networks, the configuration as "config.*"
// metadata, its digest, and the step counters.
ad::Checkpoint make_checkpoint(const GanConfig& config, Generator<float>& generator,
                               Discriminator<float>& discriminator, std::int64_t d_steps,
                               std::int64_t g_steps);

struct LoadedModel {
  GanConfig config;
  std::unique_ptr<ResNetGenerator<float>> generator;
  std::unique_ptr<ProjectionDiscriminator<float>> discriminator;
  std::int64_t d_steps = 0;
  std::int64_t g_steps = 0;
};

// Rebuilds both networks from a checkpoint. Throws FormatError on missing
// tensors, shape mismatches or a digest that disagrees with the stored
// configuration.
LoadedModel load_model(const ad::Checkpoint& checkpoint);
LoadedModel load_model(const std::filesystem::path& path);

struct TrainOptions {
  std::filesystem::path output_dir;
  // Called after every step with the generator step count.
  std::function<void(std::int64_t, const LossRecord&)> on_step;
};

struct TrainResult {
  std::int64_t steps = 0;
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path final_checkpoint;
  std::filesystem::path log;
};

// Runs config.steps generator steps on the tracks (any rate and channel
// count), writing checkpoint_<step>.ckpt every checkpoint_every steps plus
// final.ckpt, and appending to train_log.csv (step, L_D, L_G, wall_time_s;
// L_D is the mean over the step's discriminator updates).
TrainResult train(const GanConfig& config, const std::vector<TrainingTrack>& tracks,
                  const TrainOptions& options);

}  // namespace pmqa::gan

#endif  // PMQA_GAN_TRAINER_HPP_
