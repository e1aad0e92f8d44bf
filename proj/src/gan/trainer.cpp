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

#include "pmqa/gan/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pmqa/ad/ops.hpp"
#include "pmqa/error.hpp"

namespace pmqa::gan {

namespace {

// splitmix64 finalizer; separates the streams derived from one user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSamplerStream = 2;
constexpr std::uint64_t kTrainerStream = 3;

template <typename T>
void check_finite(const Tensor<T>& loss, const char* which) {
  if (!std::isfinite(static_cast<double>(loss.item()))) {
    throw TrainingHalted(std::string("non-finite ") + which + " loss");
  }
}

// Turns off gradient tracking for a parameter list for one scope.
template <typename T>
class FreezeGuard {
 public:
  explicit FreezeGuard(std::vector<Tensor<T>>& params) : params_(params) {
    for (auto& p : params_) p.set_requires_grad(false);
  }
  ~FreezeGuard() {
    for (auto& p : params_) p.set_requires_grad(true);
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<Tensor<T>>& params_;
};

}  // namespace

template <typename T>
GanTrainer<T>::GanTrainer(const GanConfig& config, Generator<T>& generator,
                          Discriminator<T>& discriminator)
    : config_(config),
      g_(generator),
      d_(discriminator),
      g_params_(generator.parameters().tensors()),
      d_params_(discriminator.parameters().tensors()),
      rng_(derive_seed(config.seed, kTrainerStream)) {
  config_.validate();
}

template <typename T>
void GanTrainer<T>::set_counters(std::int64_t d_steps, std::int64_t g_steps) {
  if (d_steps < 0 || g_steps < 0) throw InvalidArgument("step counters must be non-negative");
  d_steps_ = d_steps;
  g_steps_ = g_steps;
}

template <typename T>
LossRecord GanTrainer<T>::train_step(const Tensor<T>& real, std::span<const int> genres) {
  const std::int64_t batch = config_.batch_size;
  const std::int64_t total = batch * config_.d_steps_per_g;
  const ad::Shape expected{total, 1, config_.bands, config_.frames};
  if (!real.defined() || real.shape() != expected) {
    throw ShapeError("train_step expects real patches " + ad::shape_string(expected) + ", got " +
                     (real.defined() ? ad::shape_string(real.shape()) : std::string("undefined")));
  }
  if (static_cast<std::int64_t>(genres.size()) != total) {
    throw ShapeError("train_step needs one genre per real patch");
  }
  const std::int64_t patch = std::int64_t{config_.bands} * config_.frames;
  const T lr_d = static_cast<T>(config_.lr_d);
  const T lr_g = static_cast<T>(config_.lr_g);

  LossRecord record;
  for (int s = 0; s < config_.d_steps_per_g; ++s) {
    const auto labels = genres.subspan(static_cast<std::size_t>(s * batch), static_cast<std::size_t>(batch));
    Tensor<T> fake;
    {
      ad::NoGradGuard no_grad;
      fake = g_.forward(sample_noise<T>(batch, config_.z_dim, rng_), labels, Mode::kTrain);
    }
    // Real and fake go through the discriminator as one batch.
    std::vector<T> both;
    both.reserve(static_cast<std::size_t>(2 * batch * patch));
    const auto rv = real.values().subspan(static_cast<std::size_t>(s * batch * patch),
                                          static_cast<std::size_t>(batch * patch));
    both.insert(both.end(), rv.begin(), rv.end());
    both.insert(both.end(), fake.values().begin(), fake.values().end());
    std::vector<int> both_labels(labels.begin(), labels.end());
    both_labels.insert(both_labels.end(), labels.begin(), labels.end());

    const Tensor<T> scores = d_.forward(
        Tensor<T>({2 * batch, 1, config_.bands, config_.frames}, std::move(both)), both_labels,
        Mode::kTrain);
    const Tensor<T> loss = ad::hinge_d_loss(ad::narrow(scores, 0, batch), ad::narrow(scores, batch, batch));
    check_finite(loss, "discriminator");
    d_.parameters().zero_grad();
    ad::backward(loss);
    ad::adam_step<T>(d_params_, d_opt_, lr_d);
    ++d_steps_;
    record.d_losses.push_back(static_cast<double>(loss.item()));
  }

  std::uniform_int_distribution<int> genre_dist(0, config_.n_genres - 1);
  std::vector<int> labels(static_cast<std::size_t>(batch));
  for (auto& y : labels) y = genre_dist(rng_);
  Tensor<T> loss;
  {
    // Backward must also run while frozen: gradient rules consult the flags
    // when they execute.
    FreezeGuard<T> frozen(d_params_);
    const Tensor<T> fake = g_.forward(sample_noise<T>(batch, config_.z_dim, rng_), labels, Mode::kTrain);
    loss = ad::hinge_g_loss(d_.forward(fake, labels, Mode::kTrain));
    check_finite(loss, "generator");
    g_.parameters().zero_grad();
    ad::backward(loss);
  }
  ad::adam_step<T>(g_params_, g_opt_, lr_g);
  ++g_steps_;
  record.g_loss = static_cast<double>(loss.item());
  return record;
}

ad::Checkpoint make_checkpoint(const GanConfig& config, Generator<float>& generator,
                               Discriminator<float>& discriminator, std::int64_t d_steps,
                               std::int64_t g_steps) {
  ad::Checkpoint ck;
  ck.set_meta("digest", config_digest(config));
  ck.set_meta("d_steps", std::to_string(d_steps));
  ck.set_meta("g_steps", std::to_string(g_steps));
  const std::string kv = to_key_values(config);
  std::size_t pos = 0;
  while (pos < kv.size()) {
    const std::size_t nl = kv.find('\n', pos);
    const std::string line = kv.substr(pos, nl - pos);
    pos = nl + 1;
    const std::size_t eq = line.find(" = ");
    ck.set_meta("config." + line.substr(0, eq), line.substr(eq + 3));
  }
  for (ad::ParameterSet<float>* set : {&generator.parameters(), &discriminator.parameters()}) {
    for (const auto& [name, t] : set->parameters()) {
      ck.add(name, t.shape(), std::vector<float>(t.values().begin(), t.values().end()));
    }
    for (const auto& [name, buffer] : set->buffers()) {
      ck.add(name, {static_cast<std::int64_t>(buffer->size())}, *buffer);
    }
  }
  return ck;
}

namespace {

void restore(const ad::Checkpoint& ck, ad::ParameterSet<float>& set, std::size_t& used) {
  for (const auto& [name, t] : set.parameters()) {
    const ad::CheckpointTensor* stored = ck.find(name);
    if (stored == nullptr) throw FormatError("checkpoint lacks parameter '" + name + "'");
    if (stored->shape != t.shape()) {
      throw FormatError("parameter '" + name + "' has shape " + ad::shape_string(stored->shape) +
                        " in the checkpoint but " + ad::shape_string(t.shape()) + " in the model");
    }
    Tensor<float> handle = t;
    std::copy(stored->values.begin(), stored->values.end(), handle.mutable_values().begin());
    ++used;
  }
  for (const auto& [name, buffer] : set.buffers()) {
    const ad::CheckpointTensor* stored = ck.find(name);
    if (stored == nullptr) throw FormatError("checkpoint lacks buffer '" + name + "'");
    if (stored->values.size() != buffer->size()) {
      throw FormatError("buffer '" + name + "' size differs from the model");
    }
    *buffer = stored->values;
    ++used;
  }
}

std::int64_t parse_count(const std::string& text, const char* what) {
  try {
    std::size_t idx = 0;
    const long long v = std::stoll(text, &idx);
    if (idx != text.size() || v < 0) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("bad checkpoint counter ") + what + ": '" + text + "'");
  }
}

}  // namespace

LoadedModel load_model(const ad::Checkpoint& ck) {
  LoadedModel out;
  GanConfig& config = out.config;
  for (const auto& [key, value] : ck.meta) {
    if (key.rfind("config.", 0) != 0) continue;
    try {
      set_config_value(config, key.substr(7), value);
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("checkpoint configuration: ") + e.what());
    }
  }
  try {
    config.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("checkpoint configuration: ") + e.what());
  }
  if (ck.meta_value("digest") != config_digest(config)) {
    throw FormatError("checkpoint digest does not match its stored configuration");
  }
  out.d_steps = parse_count(ck.meta_value("d_steps"), "d_steps");
  out.g_steps = parse_count(ck.meta_value("g_steps"), "g_steps");
  ad::Rng rng(0);
  out.generator = std::make_unique<ResNetGenerator<float>>(config, rng);
  out.discriminator = std::make_unique<ProjectionDiscriminator<float>>(config, rng);
  std::size_t used = 0;
  restore(ck, out.generator->parameters(), used);
  restore(ck, out.discriminator->parameters(), used);
  if (used != ck.tensors.size()) {
    throw FormatError("checkpoint holds " + std::to_string(ck.tensors.size() - used) +
                      " tensors the model does not use");
  }
  return out;
}

LoadedModel load_model(const std::filesystem::path& path) {
  try {
    return load_model(ad::read_checkpoint(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

TrainResult train(const GanConfig& config, const std::vector<TrainingTrack>& tracks,
                  const TrainOptions& options) {
  config.validate();
  std::vector<TrainingTrack> prepared;
  prepared.reserve(tracks.size());
  for (const auto& t : tracks) prepared.push_back(prepare_track(t));
  SegmentSampler sampler(std::move(prepared), config, derive_seed(config.seed, kSamplerStream));

  ad::Rng init(derive_seed(config.seed, kInitStream));
  ResNetGenerator<float> generator(config, init);
  ProjectionDiscriminator<float> discriminator(config, init);
  GanTrainer<float> trainer(config, generator, discriminator);

  std::error_code ec;
  std::filesystem::create_directories(options.output_dir, ec);
  if (ec) throw IoError("cannot create " + options.output_dir.string() + ": " + ec.message());

  TrainResult result;
  result.log = options.output_dir / "train_log.csv";
  std::ofstream log(result.log, std::ios::trunc);
  if (!log) throw IoError("cannot open " + result.log.string());
  log << "step,L_D,L_G,wall_time_s\n";

  const auto started = std::chrono::steady_clock::now();
  const std::size_t per_step =
      static_cast<std::size_t>(config.batch_size) * static_cast<std::size_t>(config.d_steps_per_g);
  std::vector<float> values;
  std::vector<int> genres;
  char line[128];
  for (std::int64_t step = 1; step <= config.steps; ++step) {
    values.clear();
    genres.clear();
    sampler.draw(per_step, values, genres);
    const Tensor<float> real({static_cast<std::int64_t>(per_step), 1, config.bands, config.frames},
                             std::move(values));
    values = {};
    const LossRecord rec = trainer.train_step(real, genres);

    double d_mean = 0.0;
    for (double l : rec.d_losses) d_mean += l;
    d_mean /= static_cast<double>(rec.d_losses.size());
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::snprintf(line, sizeof(line), "%lld,%.9g,%.9g,%.3f\n", static_cast<long long>(step),
                  d_mean, rec.g_loss, wall);
    if (step % config.log_every == 0 || step == config.steps) log << line << std::flush;
    if (options.on_step) options.on_step(step, rec);

    if (step % config.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_%06lld.ckpt", static_cast<long long>(step));
      const auto path = options.output_dir / name;
      ad::write_checkpoint(path, make_checkpoint(config, generator, discriminator,
                                                 trainer.d_steps(), trainer.g_steps()));
      result.checkpoints.push_back(path);
    }
    result.steps = step;
  }
  result.final_checkpoint = options.output_dir / "final.ckpt";
  ad::write_checkpoint(result.final_checkpoint,
                       make_checkpoint(config, generator, discriminator, trainer.d_steps(),
                                       trainer.g_steps()));
  return result;
}

template class GanTrainer<float>;
template class GanTrainer<double>;

}  // namespace pmqa::gan
