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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "pmqa/ad/ops.hpp"
#include "pmqa/error.hpp"
#include "pmqa/gan/config.hpp"
#include "pmqa/gan/data.hpp"
#include "pmqa/gan/model.hpp"
#include "pmqa/gan/synthetic.hpp"
#include "pmqa/gan/trainer.hpp"
#include "pmqa/scoring.hpp"

namespace pmqa::gan {
namespace {

using ad::Shape;

GanConfig tiny_config() {
  GanConfig c = toy_config();
  c.bands = c.frames = 16;
  c.z_dim = 8;
  c.channel_multiplier = 4;
  c.attention_resolution = 8;
  c.batch_size = 4;
  c.steps = 2;
  c.checkpoint_every = 1;
  c.log_every = 1;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Config, ProfilesValidate) {
  EXPECT_NO_THROW(toy_config().validate());
  EXPECT_NO_THROW(full_config().validate());
  EXPECT_EQ(full_config().bands, 256);
  EXPECT_EQ(full_config().n_genres, 13);
  EXPECT_EQ(profile_config("toy").bands, 64);
  EXPECT_THROW(profile_config("huge"), InvalidArgument);
  GanConfig bad = toy_config();
  bad.frames = 32;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = toy_config();
  bad.bands = bad.frames = 48;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Config, KeyValuesRoundTrip) {
  GanConfig c = toy_config();
  c.seed = 77;
  c.lr_d = 3e-4;
  GanConfig back;
  apply_key_values(back, to_key_values(c));
  EXPECT_EQ(to_key_values(back), to_key_values(c));
  apply_key_values(back, "# comment\nsteps = 12  # trailing\n\n");
  EXPECT_EQ(back.steps, 12);
  EXPECT_THROW(apply_key_values(back, "nonsense = 1"), InvalidArgument);
  EXPECT_THROW(apply_key_values(back, "steps = many"), InvalidArgument);
}

TEST(Config, DigestTracksArchitectureOnly) {
  GanConfig a = toy_config(), b = toy_config();
  b.seed = 5;
  b.steps = 3;
  EXPECT_EQ(config_digest(a), config_digest(b));
  b.channel_multiplier = 8;
  EXPECT_NE(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a).size(), 16u);
}

TEST(Config, GenreNames) {
  EXPECT_EQ(genre_id("Acoustic"), 0);
  EXPECT_EQ(genre_id("Rock"), 12);
  EXPECT_EQ(genre_id("Polka"), -1);
}

TEST(Noise, DeterministicStandardNormal) {
  const auto a = sample_noise<double>(200, 50, 3);
  const auto b = sample_noise<double>(200, 50, 3);
  EXPECT_EQ(std::vector<double>(a.values().begin(), a.values().end()),
            std::vector<double>(b.values().begin(), b.values().end()));
  double m = 0, s = 0;
  for (double v : a.values()) m += v;
  m /= 10000.0;
  for (double v : a.values()) s += (v - m) * (v - m);
  EXPECT_NEAR(m, 0.0, 0.05);
  EXPECT_NEAR(std::sqrt(s / 10000.0), 1.0, 0.05);
}

TEST(Model, ShapesAndRange) {
  for (const GanConfig& c : {tiny_config(), toy_config()}) {
    ad::Rng rng(1);
    ResNetGenerator<float> g(c, rng);
    ProjectionDiscriminator<float> d(c, rng);
    const std::vector<int> y{0, 1, 1};
    const auto x = g.forward(sample_noise<float>(3, c.z_dim, 2), y, Mode::kTrain);
    EXPECT_EQ(x.shape(), (Shape{3, 1, c.bands, c.frames}));
    for (float v : x.values()) {
      EXPECT_GE(v, -1.0f);
      EXPECT_LE(v, 1.0f);
    }
    const auto s = d.forward(x, y, Mode::kTrain);
    EXPECT_EQ(s.shape(), (Shape{3}));
    EXPECT_THROW(d.forward(x, std::vector<int>{0, 1}, Mode::kEval), ShapeError);
    EXPECT_THROW(d.forward(x, std::vector<int>{0, 1, 2}, Mode::kEval), InvalidArgument);
  }
}

TEST(Model, ToyParameterCounts) {
  ad::Rng rng(0);
  ResNetGenerator<float> g(toy_config(), rng);
  ProjectionDiscriminator<float> d(toy_config(), rng);
  EXPECT_GT(g.parameters().parameter_count(), 100000);
  EXPECT_GT(d.parameters().parameter_count(), 100000);
}

TEST(Projection, ScoreIsHeadPlusEmbeddingDotFeatures) {
  const GanConfig c = tiny_config();
  ad::Rng rng(4);
  ProjectionDiscriminator<double> d(c, rng);
  const auto x = ad::Tensor<double>({2, 1, 16, 16}, std::vector<double>(512, 0.3));
  std::vector<double> xv(512);
  std::normal_distribution<double> g(0.0, 0.5);
  for (auto& v : xv) v = g(rng);
  const ad::Tensor<double> input({2, 1, 16, 16}, xv);
  const std::vector<int> y{1, 0};
  const auto score = d.forward(input, y, Mode::kEval);
  const auto phi = d.features(input, Mode::kEval);
  const auto psi = d.unconditional(phi, Mode::kEval);
  const auto e = d.genre_embedding(Mode::kEval);
  const auto width = phi.dim(1);
  for (int n = 0; n < 2; ++n) {
    double inner = 0.0;
    for (std::int64_t k = 0; k < width; ++k) {
      inner += e.values()[y[n] * width + k] * phi.values()[n * width + k];
    }
    EXPECT_NEAR(score.values()[n], psi.values()[n] + inner, 1e-10);
  }
}

TEST(Projection, ZeroEmbeddingMakesScoreGenreFree) {
  const GanConfig c = tiny_config();
  ad::Rng rng(5);
  ProjectionDiscriminator<double> d(c, rng);
  for (auto& v : d.raw_genre_embedding().mutable_values()) v = 0.0;
  std::vector<double> xv(256);
  std::normal_distribution<double> g(0.0, 0.5);
  for (auto& v : xv) v = g(rng);
  const ad::Tensor<double> x({1, 1, 16, 16}, xv);
  const auto a = d.forward(x, std::vector<int>{0}, Mode::kEval).item();
  const auto b = d.forward(x, std::vector<int>{1}, Mode::kEval).item();
  EXPECT_EQ(a, b);
}

// Networks with closed-form outputs: the generator always emits -1 and the
// discriminator scores 2 * mean(x), so real patches of +1 score 2 and fakes -2.
class ConstantGenerator final : public Generator<double> {
 public:
  ConstantGenerator(std::int64_t side) : side_(side) {
    p_ = params_.add_parameter("p", ad::Tensor<double>::scalar(0.0));
  }
  ad::Tensor<double> forward(const ad::Tensor<double>& z, std::span<const int>, Mode) override {
    const Shape s{z.dim(0), 1, side_, side_};
    return ad::add(ad::Tensor<double>::full(s, -1.0), ad::scale_by(ad::Tensor<double>::zeros(s), p_));
  }
  ad::ParameterSet<double>& parameters() override { return params_; }

 private:
  std::int64_t side_;
  ad::ParameterSet<double> params_;
  ad::Tensor<double> p_;
};

class MeanDiscriminator final : public Discriminator<double> {
 public:
  MeanDiscriminator() { q_ = params_.add_parameter("q", ad::Tensor<double>::scalar(0.0)); }
  ad::Tensor<double> forward(const ad::Tensor<double>& x, std::span<const int>, Mode) override {
    const std::int64_t n = x.dim(0), m = x.numel() / n;
    const auto w = ad::Tensor<double>::full({m, 1}, 2.0 / static_cast<double>(m));
    const auto s = ad::reshape(ad::matmul(ad::reshape(x, {n, m}), w), {n});
    return ad::add(s, ad::scale_by(ad::Tensor<double>::zeros({n}), q_));
  }
  ad::ParameterSet<double>& parameters() override { return params_; }

 private:
  ad::ParameterSet<double> params_;
  ad::Tensor<double> q_;
};

TEST(Trainer, PerfectDiscriminatorHasZeroHingeLoss) {
  GanConfig c = tiny_config();
  ConstantGenerator g(c.bands);
  MeanDiscriminator d;
  GanTrainer<double> trainer(c, g, d);
  const std::int64_t total = c.batch_size * c.d_steps_per_g;
  const auto real = ad::Tensor<double>::full({total, 1, c.bands, c.frames}, 1.0);
  const std::vector<int> genres(static_cast<std::size_t>(total), 0);
  const auto rec = trainer.train_step(real, genres);
  ASSERT_EQ(rec.d_losses.size(), static_cast<std::size_t>(c.d_steps_per_g));
  for (double l : rec.d_losses) EXPECT_DOUBLE_EQ(l, 0.0);
  EXPECT_DOUBLE_EQ(rec.g_loss, 2.0);
  EXPECT_EQ(trainer.d_steps(), c.d_steps_per_g);
  EXPECT_EQ(trainer.g_steps(), 1);
}

// Snapshots the wrapped discriminator's parameters at every forward pass.
class SpyDiscriminator final : public Discriminator<double> {
 public:
  explicit SpyDiscriminator(Discriminator<double>& inner) : inner_(inner) {}
  ad::Tensor<double> forward(const ad::Tensor<double>& x, std::span<const int> genres, Mode mode) override {
    snapshot = values();
    return inner_.forward(x, genres, mode);
  }
  ad::ParameterSet<double>& parameters() override { return inner_.parameters(); }
  std::map<std::string, std::vector<double>> values() {
    std::map<std::string, std::vector<double>> out;
    for (const auto& [name, t] : inner_.parameters().parameters()) out[name].assign(t.values().begin(), t.values().end());
    return out;
  }
  std::map<std::string, std::vector<double>> snapshot;

 private:
  Discriminator<double>& inner_;
};

TEST(Trainer, GeneratorStepLeavesDiscriminatorUntouched) {
  GanConfig c = tiny_config();
  c.d_steps_per_g = 1;
  ad::Rng rng(6);
  ResNetGenerator<double> g(c, rng);
  ProjectionDiscriminator<double> inner(c, rng);
  SpyDiscriminator d(inner);
  GanTrainer<double> trainer(c, g, d);
  const auto initial = d.values();
  std::vector<double> real(static_cast<std::size_t>(c.batch_size * 256));
  std::normal_distribution<double> n(0.0, 0.5);
  for (auto& v : real) v = n(rng);
  trainer.train_step(ad::Tensor<double>({c.batch_size, 1, 16, 16}, real), std::vector<int>(4, 1));
  // The last forward pass belongs to the generator update.
  EXPECT_NE(d.snapshot, initial);
  EXPECT_EQ(d.values(), d.snapshot);
  for (const auto& [name, t] : d.parameters().parameters()) EXPECT_TRUE(t.requires_grad()) << name;
}

TEST(Trainer, RejectsWrongBatch) {
  GanConfig c = tiny_config();
  ConstantGenerator g(c.bands);
  MeanDiscriminator d;
  GanTrainer<double> trainer(c, g, d);
  EXPECT_THROW(trainer.train_step(ad::Tensor<double>::zeros({3, 1, 16, 16}), std::vector<int>(3, 0)),
               ShapeError);
}

TEST(Data, BalancedEpochTruncatesToSmallestGenre) {
  const std::vector<int> genres{0, 0, 0, 0, 1, 1, 2, 2, 2};
  ad::Rng rng(1);
  const auto epoch = balanced_epoch(genres, 3, rng);
  ASSERT_EQ(epoch.size(), 6u);
  std::map<int, int> count;
  std::set<std::size_t> seen;
  for (auto i : epoch) {
    ++count[genres[i]];
    EXPECT_TRUE(seen.insert(i).second);
  }
  for (int g = 0; g < 3; ++g) EXPECT_EQ(count[g], 2);
  EXPECT_THROW(balanced_epoch(std::vector<int>{0, 0}, 2, rng), InvalidArgument);
}

TEST(Data, SamplerDrawsNormalizedPatches) {
  const GanConfig c = tiny_config();
  std::vector<TrainingTrack> tracks;
  for (auto& t : synthetic_corpus(2, 2.0, 1, 16000)) tracks.push_back(prepare_track(t));
  SegmentSampler sampler(tracks, c, 9);
  std::vector<float> values;
  std::vector<int> genres;
  sampler.draw(8, values, genres);
  ASSERT_EQ(values.size(), 8u * 256u);
  ASSERT_EQ(genres.size(), 8u);
  for (float v : values) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_EQ(sampler.epoch_size(), 4u);
  EXPECT_EQ(sampler.epochs_started(), 2);
  EXPECT_EQ(std::count(genres.begin(), genres.end(), 0), 4);
  EXPECT_EQ(sampler.segment_samples(), 15u * 256u);
}

TEST(Synthetic, DeterministicAndDistinctGenres) {
  const auto a = synthetic_corpus(2, 1.0, 5, 16000);
  const auto b = synthetic_corpus(2, 1.0, 5, 16000);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].audio.channels(), b[i].audio.channels());
  EXPECT_EQ(a[0].id, "syn0_0");
  EXPECT_EQ(synthetic_genre_name(0), "tonal");
  // Bursts of noise are spectrally flatter than harmonic notes.
  EXPECT_GT(spectral_flatness(synth_percussive(2.0, 16000, 1), 16000),
            spectral_flatness(synth_tonal(2.0, 16000, 1), 16000));
}

TEST(Checkpointing, ReloadGivesIdenticalScores) {
  const GanConfig c = tiny_config();
  ad::Rng rng(7);
  ResNetGenerator<float> g(c, rng);
  ProjectionDiscriminator<float> d(c, rng);
  const auto ck = make_checkpoint(c, g, d, 4, 2);
  LoadedModel m = load_model(ad::decode_checkpoint(ad::encode_checkpoint(ck)));
  EXPECT_EQ(m.d_steps, 4);
  EXPECT_EQ(m.g_steps, 2);
  const auto x = g.forward(sample_noise<float>(2, c.z_dim, 1), std::vector<int>{0, 1}, Mode::kEval).detach();
  const std::vector<int> y{0, 1};
  const auto a = d.forward(x, y, Mode::kEval), b = m.discriminator->forward(x, y, Mode::kEval);
  EXPECT_EQ(std::vector<float>(a.values().begin(), a.values().end()),
            std::vector<float>(b.values().begin(), b.values().end()));
}

TEST(Checkpointing, RejectsTamperedDigestAndMissingTensors) {
  const GanConfig c = tiny_config();
  ad::Rng rng(7);
  ResNetGenerator<float> g(c, rng);
  ProjectionDiscriminator<float> d(c, rng);
  auto ck = make_checkpoint(c, g, d, 0, 0);
  auto tampered = ck;
  tampered.set_meta("config.channel_multiplier", "8");
  EXPECT_THROW(load_model(tampered), FormatError);
  auto missing = ck;
  missing.tensors.pop_back();
  EXPECT_THROW(load_model(missing), FormatError);
}

TEST(Training, ByteReproducible) {
  GanConfig c = tiny_config();
  c.seed = 11;
  const auto tracks = synthetic_corpus(2, 2.0, 3, 16000);
  const auto root = std::filesystem::temp_directory_path() / "pmqa_train_repro";
  std::filesystem::remove_all(root);
  const auto r1 = train(c, tracks, {root / "a", {}});
  const auto r2 = train(c, tracks, {root / "b", {}});
  EXPECT_EQ(r1.steps, 2);
  ASSERT_EQ(r1.checkpoints.size(), 2u);
  EXPECT_EQ(slurp(r1.final_checkpoint), slurp(r2.final_checkpoint));
  EXPECT_EQ(slurp(r1.checkpoints[0]), slurp(r2.checkpoints[0]));
  const LoadedModel m = load_model(r1.final_checkpoint);
  EXPECT_EQ(m.g_steps, 2);
  EXPECT_EQ(m.d_steps, 2 * c.d_steps_per_g);
  std::filesystem::remove_all(root);
}

}  // namespace
}  // namespace pmqa::gan
