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

#include "pmqa/gan/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pmqa/error.hpp"

namespace pmqa::gan {

namespace {

std::size_t sample_count(double seconds, int rate) {
  if (!(seconds > 0) || rate <= 0) throw InvalidArgument("synthetic clip needs a positive length and rate");
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

void peak_normalize(std::vector<double>& x, double peak) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m > 0) {
    for (double& v : x) v *= peak / m;
  }
}

}  // namespace

std::string synthetic_genre_name(int genre) {
  switch (genre) {
    case 0: return "tonal";
    case 1: return "percussive";
    default: break;
  }
  throw InvalidArgument("synthetic genre id " + std::to_string(genre) + " outside [0, 2)");
}

AudioBuffer synth_tonal(double seconds, int sample_rate, std::uint64_t seed) {
  const std::size_t n = sample_count(seconds, sample_rate);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> out(n, 0.0);
  const double two_pi = 2.0 * std::numbers::pi;
  const double nyquist = 0.5 * sample_rate;

  double t = 0.0;
  while (t < seconds) {
    const double f0 = 110.0 * std::pow(2.0, 3.0 * unit(rng));  // 110 - 880 Hz
    const double length = 0.25 + 0.55 * unit(rng);
    const double decay = 0.15 + 0.5 * unit(rng);
    const double amp = 0.5 + 0.5 * unit(rng);
    const int harmonics = 3 + static_cast<int>(unit(rng) * 5);
    const double brightness = 1.0 + unit(rng);
    std::vector<double> phase(static_cast<std::size_t>(harmonics));
    for (auto& p : phase) p = two_pi * unit(rng);

    const auto begin = static_cast<std::size_t>(t * sample_rate);
    // Let the release ring past the next onset.
    const auto end = std::min(n, begin + static_cast<std::size_t>((length + 3 * 0.05) * sample_rate));
    for (std::size_t i = begin; i < end; ++i) {
      const double u = static_cast<double>(i - begin) / sample_rate;
      double env = std::min(1.0, u / 0.01) * std::exp(-u / decay);
      if (u > length) env *= std::exp(-(u - length) / 0.05);
      double s = 0.0;
      for (int h = 1; h <= harmonics; ++h) {
        const double f = f0 * h;
        if (f >= nyquist) break;
        s += std::sin(two_pi * f * u + phase[static_cast<std::size_t>(h - 1)]) / std::pow(h, brightness);
      }
      out[i] += amp * env * s;
    }
    t += length * (0.7 + 0.3 * unit(rng));
  }
  peak_normalize(out, 0.5);
  return AudioBuffer::Mono(std::move(out), sample_rate);
}

AudioBuffer synth_percussive(double seconds, int sample_rate, std::uint64_t seed) {
  const std::size_t n = sample_count(seconds, sample_rate);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(n, 0.0);

  double t = 0.05 * unit(rng);
  while (t < seconds) {
    const double decay = 0.01 + 0.05 * unit(rng);
    const double amp = 0.3 + 0.7 * unit(rng);
    // One-pole low-pass smoothing sets the burst's brightness.
    const double cutoff = 500.0 * std::pow(2.0, 4.0 * unit(rng));
    const double a = std::exp(-2.0 * std::numbers::pi * cutoff / sample_rate);
    const auto begin = static_cast<std::size_t>(t * sample_rate);
    const auto end = std::min(n, begin + static_cast<std::size_t>(6.0 * decay * sample_rate));
    double state = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double u = static_cast<double>(i - begin) / sample_rate;
      state = a * state + (1.0 - a) * normal(rng);
      out[i] += amp * std::exp(-u / decay) * state;
    }
    // Silent gap until the next hit.
    t += 6.0 * decay + 0.05 + 0.3 * unit(rng);
  }
  peak_normalize(out, 0.5);
  return AudioBuffer::Mono(std::move(out), sample_rate);
}

AudioBuffer synth_clip(int genre, double seconds, int sample_rate, std::uint64_t seed) {
  switch (genre) {
    case 0: return synth_tonal(seconds, sample_rate, seed);
    case 1: return synth_percussive(seconds, sample_rate, seed);
    default: break;
  }
  throw InvalidArgument("synthetic genre id " + std::to_string(genre) + " outside [0, 2)");
}

std::vector<TrainingTrack> synthetic_corpus(int tracks_per_genre, double seconds,
                                            std::uint64_t seed, int sample_rate) {
  if (tracks_per_genre <= 0) throw InvalidArgument("tracks_per_genre must be positive");
  std::vector<TrainingTrack> out;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::vector<std::uint32_t> words(2 * static_cast<std::size_t>(tracks_per_genre) * kSyntheticGenres);
  seq.generate(words.begin(), words.end());
  std::size_t w = 0;
  for (int g = 0; g < kSyntheticGenres; ++g) {
    for (int i = 0; i < tracks_per_genre; ++i, w += 2) {
      const std::uint64_t track_seed = (std::uint64_t{words[w]} << 32) | words[w + 1];
      out.push_back({"syn" + std::to_string(g) + "_" + std::to_string(i), g,
                     synth_clip(g, seconds, sample_rate, track_seed)});
    }
  }
  return out;
}

}  // namespace pmqa::gan
