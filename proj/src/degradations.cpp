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

#include "pmqa/degradations.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pmqa/error.hpp"

namespace pmqa {

namespace {

constexpr double kLimiterReleaseSeconds = 0.1;

void check_intensity(double intensity) {
  if (!(intensity >= 0.0 && intensity <= 100.0)) {
    throw InvalidArgument("degradation intensity must lie in [0, 100], got " +
                          std::to_string(intensity));
  }
}

double lerp(double a, double b, double intensity) { return a + (b - a) * intensity / 100.0; }

double db_to_linear(double db) { return std::pow(10.0, db / 20.0); }

struct Biquad {
  double b0, b1, b2, a1, a2;

  void run(std::span<double> x) const {
    double z1 = 0.0, z2 = 0.0;  // transposed direct form II
    for (double& v : x) {
      const double in = v;
      const double out = b0 * in + z1;
      z1 = b1 * in - a1 * out + z2;
      z2 = b2 * in - a2 * out;
      v = out;
    }
  }
};

Biquad lowpass_section(double cutoff_hz, double sample_rate, double q) {
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate);
  const double k2 = k * k;
  const double norm = 1.0 / (1.0 + k / q + k2);
  Biquad s;
  s.b0 = k2 * norm;
  s.b1 = 2.0 * s.b0;
  s.b2 = s.b0;
  s.a1 = 2.0 * (k2 - 1.0) * norm;
  s.a2 = (1.0 - k / q + k2) * norm;
  return s;
}

}  // namespace

std::string to_string(DegradationKind kind) {
  switch (kind) {
    case DegradationKind::kNone:
      return "none";
    case DegradationKind::kDistortion:
      return "distortion";
    case DegradationKind::kLowpass:
      return "lowpass";
    case DegradationKind::kLimiter:
      return "limiter";
    case DegradationKind::kNoise:
      return "noise";
  }
  return "none";
}

DegradationKind parse_degradation_kind(std::string_view name) {
  if (name == "none") return DegradationKind::kNone;
  if (name == "distortion") return DegradationKind::kDistortion;
  if (name == "lowpass") return DegradationKind::kLowpass;
  if (name == "limiter") return DegradationKind::kLimiter;
  if (name == "noise") return DegradationKind::kNoise;
  throw InvalidArgument("unknown degradation kind '" + std::string(name) + "'");
}

void DegradationSpec::validate() const { check_intensity(intensity); }

double intensity_to_param(DegradationKind kind, double intensity) {
  check_intensity(intensity);
  switch (kind) {
    case DegradationKind::kDistortion:
      return lerp(50.0, 100.0, intensity);
    case DegradationKind::kLowpass:
      return lerp(20000.0, 1000.0, intensity);
    case DegradationKind::kLimiter:
      return lerp(0.0, -30.0, intensity);
    case DegradationKind::kNoise:
      return lerp(-25.0, 0.0, intensity);
    case DegradationKind::kNone:
      break;
  }
  return 0.0;
}

AudioBuffer waveshape_distortion(const AudioBuffer& buffer, double intensity) {
  const double shape = intensity_to_param(DegradationKind::kDistortion, intensity) / 100.0;
  // shape == 1 gives g = tan(pi/2), a ~1e16 gain: the square-wave limit.
  const double gain = std::tan(0.5 * std::numbers::pi * shape);
  const double norm = std::tanh(gain);
  AudioBuffer out = buffer;
  for (std::size_t c = 0; c < out.channel_count(); ++c) {
    for (double& v : out.channel(c)) {
      v = std::clamp(std::tanh(gain * v) / norm, -1.0, 1.0);
    }
  }
  return out;
}

AudioBuffer butterworth_lowpass_hz(const AudioBuffer& buffer, double cutoff_hz) {
  const double rate = buffer.sample_rate();
  if (!(cutoff_hz > 0.0) || cutoff_hz >= 0.5 * rate) {
    throw InvalidArgument("lowpass cutoff " + std::to_string(cutoff_hz) +
                          " Hz must lie below the Nyquist frequency " +
                          std::to_string(0.5 * rate) + " Hz");
  }
  // Pole-pair Q values of a 4th-order Butterworth prototype.
  const Biquad s1 = lowpass_section(cutoff_hz, rate, 1.0 / (2.0 * std::cos(std::numbers::pi / 8.0)));
  const Biquad s2 =
      lowpass_section(cutoff_hz, rate, 1.0 / (2.0 * std::cos(3.0 * std::numbers::pi / 8.0)));
  AudioBuffer out = buffer;
  for (std::size_t c = 0; c < out.channel_count(); ++c) {
    s1.run(out.channel(c));
    s2.run(out.channel(c));
  }
  return out;
}

AudioBuffer butterworth_lowpass(const AudioBuffer& buffer, double intensity) {
  return butterworth_lowpass_hz(buffer, intensity_to_param(DegradationKind::kLowpass, intensity));
}

AudioBuffer limiter(const AudioBuffer& buffer, double intensity) {
  const double threshold = db_to_linear(intensity_to_param(DegradationKind::kLimiter, intensity));
  const double release = std::exp(-1.0 / (kLimiterReleaseSeconds * buffer.sample_rate()));
  AudioBuffer out = buffer;
  for (std::size_t c = 0; c < out.channel_count(); ++c) {
    double envelope = 0.0;
    for (double& v : out.channel(c)) {
      envelope = std::max(std::abs(v), envelope * release);
      const double gain = envelope > threshold ? threshold / envelope : 1.0;
      v = std::clamp(v * gain, -threshold, threshold);
    }
  }
  return out;
}

std::vector<double> pink_noise(std::size_t length, double rms, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> white(0.0, 1.0);
  std::vector<double> out(length);
  // Three-pole pinking filter (P. Kellet's economy coefficients).
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (auto& v : out) {
    const double w = white(rng);
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    v = b0 + b1 + b2 + w * 0.1848;
  }
  if (length == 0) return out;
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(length);
  double energy = 0.0;
  for (double& v : out) {
    v -= mean;
    energy += v * v;
  }
  const double current = std::sqrt(energy / static_cast<double>(length));
  if (current > 0.0) {
    for (double& v : out) v *= rms / current;
  }
  return out;
}

AudioBuffer add_pink_noise(const AudioBuffer& buffer, double intensity, std::uint64_t seed) {
  const double rms = db_to_linear(intensity_to_param(DegradationKind::kNoise, intensity));
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::vector<std::uint64_t> channel_seeds(buffer.channel_count());
  {
    std::vector<std::uint32_t> words(2 * buffer.channel_count());
    seq.generate(words.begin(), words.end());
    for (std::size_t c = 0; c < channel_seeds.size(); ++c) {
      channel_seeds[c] = (static_cast<std::uint64_t>(words[2 * c]) << 32) | words[2 * c + 1];
    }
  }
  AudioBuffer out = buffer;
  for (std::size_t c = 0; c < out.channel_count(); ++c) {
    const auto noise = pink_noise(out.length(), rms, channel_seeds[c]);
    auto ch = out.channel(c);
    for (std::size_t i = 0; i < ch.size(); ++i) ch[i] += noise[i];
  }
  return out;
}

AudioBuffer apply(const AudioBuffer& buffer, const DegradationSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case DegradationKind::kNone:
      return buffer;
    case DegradationKind::kDistortion:
      return waveshape_distortion(buffer, spec.intensity);
    case DegradationKind::kLowpass:
      return butterworth_lowpass(buffer, spec.intensity);
    case DegradationKind::kLimiter:
      return limiter(buffer, spec.intensity);
    case DegradationKind::kNoise:
      return add_pink_noise(buffer, spec.intensity, spec.seed);
  }
  return buffer;
}

}  // namespace pmqa
