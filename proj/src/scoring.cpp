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

#include "pmqa/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "pmqa/ad/ops.hpp"
#include "pmqa/error.hpp"
#include "pmqa/gan/synthetic.hpp"

namespace pmqa {

namespace {

constexpr int kModelRate = 16000;
constexpr std::size_t kScoreBatch = 16;

}  // namespace

MelSpectrogram score_input(const AudioBuffer& audio, int bands, int frames) {
  if (audio.empty()) throw InvalidArgument("cannot score an empty clip");
  AudioBuffer mono = downmix_to_mono(audio);
  if (mono.sample_rate() != kModelRate) mono = resample(mono, kModelRate);
  FrontendConfig frontend;
  frontend.n_mels = bands;
  if (mono.length() < static_cast<std::size_t>(frontend.n_fft)) {
    throw InvalidArgument("clip is shorter than one STFT window (" + std::to_string(mono.length()) +
                          " samples at 16 kHz, need " + std::to_string(frontend.n_fft) + ")");
  }
  return fit_frames(mel_spectrogram(mono, frontend), static_cast<std::size_t>(frames));
}

Scorer::Scorer(gan::LoadedModel model) : model_(std::move(model)) {
  if (!model_.discriminator) throw InvalidArgument("scorer needs a discriminator");
}

Scorer Scorer::from_checkpoint(const std::filesystem::path& path) {
  return Scorer(gan::load_model(path));
}

double Scorer::score(const AudioBuffer& audio, int genre) const {
  return score(score_input(audio, model_.config.bands, model_.config.frames), genre);
}

double Scorer::score(const MelSpectrogram& input, int genre) const {
  return score_inputs(std::span<const MelSpectrogram>(&input, 1), std::span<const int>(&genre, 1)).front();
}

std::vector<double> Scorer::score_batch(std::span<const AudioBuffer> clips,
                                        std::span<const int> genres) const {
  if (clips.size() != genres.size()) throw InvalidArgument("score_batch: one genre per clip");
  std::vector<MelSpectrogram> inputs;
  inputs.reserve(clips.size());
  for (const auto& clip : clips) {
    inputs.push_back(score_input(clip, model_.config.bands, model_.config.frames));
  }
  return score_inputs(inputs, genres);
}

std::vector<double> Scorer::score_inputs(std::span<const MelSpectrogram> inputs,
                                         std::span<const int> genres) const {
  const auto bands = static_cast<std::size_t>(model_.config.bands);
  const auto frames = static_cast<std::size_t>(model_.config.frames);
  for (int g : genres) {
    if (g < 0 || g >= model_.config.n_genres) {
      throw InvalidArgument("genre id " + std::to_string(g) + " unknown to the model (" +
                            std::to_string(model_.config.n_genres) + " genres)");
    }
  }
  ad::NoGradGuard no_grad;
  std::vector<double> out;
  out.reserve(inputs.size());
  for (std::size_t begin = 0; begin < inputs.size(); begin += kScoreBatch) {
    const std::size_t n = std::min(kScoreBatch, inputs.size() - begin);
    std::vector<float> values;
    values.reserve(n * bands * frames);
    for (std::size_t i = begin; i < begin + n; ++i) {
      if (inputs[i].bands != bands || inputs[i].frames != frames) {
        throw ShapeError("score input is " + std::to_string(inputs[i].bands) + "x" +
                         std::to_string(inputs[i].frames) + ", model expects " +
                         std::to_string(bands) + "x" + std::to_string(frames));
      }
      values.insert(values.end(), inputs[i].values.begin(), inputs[i].values.end());
    }
    const ad::Tensor<float> x({static_cast<std::int64_t>(n), 1, static_cast<std::int64_t>(bands),
                               static_cast<std::int64_t>(frames)},
                              std::move(values));
    const ad::Tensor<float> scores =
        model_.discriminator->forward(x, genres.subspan(begin, n), ad::Mode::kEval);
    for (float s : scores.values()) out.push_back(static_cast<double>(s));
  }
  return out;
}

int resolve_genre(const gan::GanConfig& config, std::string_view name) {
  if (config.n_genres == static_cast<int>(gan::kGenreNames.size())) {
    const int id = gan::genre_id(name);
    if (id >= 0) return id;
  }
  if (config.n_genres == gan::kSyntheticGenres) {
    for (int g = 0; g < gan::kSyntheticGenres; ++g) {
      if (name == gan::synthetic_genre_name(g)) return g;
    }
  }
  int label = -1;
  const auto* end = name.data() + name.size();
  const auto [ptr, ec] = std::from_chars(name.data(), end, label);
  if (ec == std::errc() && ptr == end && label >= 0 && label < config.n_genres) return label;
  throw InvalidArgument("genre '" + std::string(name) + "' is not known to a model with " +
                        std::to_string(config.n_genres) + " genres");
}

double mse_measure(const AudioBuffer& reference, const AudioBuffer& degraded) {
  if (reference.sample_rate() != degraded.sample_rate() ||
      reference.channel_count() != degraded.channel_count() ||
      reference.length() != degraded.length()) {
    throw ShapeError("mse_measure: clips differ in rate, channel count or length");
  }
  if (reference.empty()) throw InvalidArgument("mse_measure: empty clips");
  double acc = 0.0;
  for (std::size_t c = 0; c < reference.channel_count(); ++c) {
    const auto a = reference.channel(c);
    const auto b = degraded.channel(c);
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return acc / static_cast<double>(reference.channel_count() * reference.length());
}

namespace {

double channel_flatness(std::span<const double> samples) {
  constexpr double kFloor = 1e-10;
  const Matrix mag = stft_magnitude(samples, 2048, 512);
  double total = 0.0;
  for (std::size_t t = 0; t < mag.cols; ++t) {
    double log_sum = 0.0, sum = 0.0;
    for (std::size_t k = 0; k < mag.rows; ++k) {
      const double p = std::max(kFloor, mag(k, t) * mag(k, t));
      log_sum += std::log(p);
      sum += p;
    }
    const double n = static_cast<double>(mag.rows);
    total += std::min(1.0, std::exp(log_sum / n) / (sum / n));
  }
  return total / static_cast<double>(mag.cols);
}

}  // namespace

double spectral_flatness(const AudioBuffer& audio, int analysis_rate) {
  if (audio.empty()) throw InvalidArgument("spectral_flatness: empty clip");
  if (analysis_rate <= 0) throw InvalidArgument("spectral_flatness: analysis rate must be positive");
  if (analysis_rate == audio.sample_rate()) {
    double acc = 0.0;
    for (std::size_t c = 0; c < audio.channel_count(); ++c) acc += channel_flatness(audio.channel(c));
    return acc / static_cast<double>(audio.channel_count());
  }
  const AudioBuffer mono = resample(downmix_to_mono(audio), analysis_rate);
  return channel_flatness(mono.channel(0));
}

}  // namespace pmqa
