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

#include "pmqa/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include "fft.hpp"
#include "pmqa/error.hpp"

namespace pmqa {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace {

constexpr char kMelMagic[8] = {'P', 'M', 'Q', 'A', 'M', 'E', 'L', '1'};

// Index into a signal mirrored about its end samples (numpy "reflect").
std::size_t reflect_index(long long i, long long n) {
  if (n == 1) return 0;
  const long long period = 2 * (n - 1);
  long long k = i % period;
  if (k < 0) k += period;
  if (k >= n) k = period - k;
  return static_cast<std::size_t>(k);
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t stft_frame_count(std::size_t length, int hop) {
  return 1 + length / static_cast<std::size_t>(hop);
}

Matrix stft_magnitude(std::span<const double> samples, int n_fft, int hop) {
  if (samples.empty()) throw InvalidArgument("stft: empty signal");
  if (n_fft <= 0 || hop <= 0) throw InvalidArgument("stft: n_fft and hop must be positive");
  const auto n = static_cast<long long>(samples.size());
  const std::size_t frames = stft_frame_count(samples.size(), hop);
  const auto fft_size = static_cast<std::size_t>(n_fft);
  const long long half = n_fft / 2;

  std::vector<double> window(fft_size);
  for (std::size_t i = 0; i < fft_size; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n_fft);
  }

  internal::RealFft fft(fft_size);
  std::vector<double> frame(fft_size);
  std::vector<std::complex<double>> spectrum(fft.bins());
  Matrix out(fft.bins(), frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const long long start = static_cast<long long>(t) * hop - half;
    for (std::size_t i = 0; i < fft_size; ++i) {
      frame[i] = samples[reflect_index(start + static_cast<long long>(i), n)] * window[i];
    }
    fft.forward(frame, spectrum);
    for (std::size_t k = 0; k < spectrum.size(); ++k) out(k, t) = std::abs(spectrum[k]);
  }
  return out;
}

Matrix stft_magnitude(const AudioBuffer& mono, int n_fft, int hop) {
  if (mono.channel_count() != 1) throw InvalidArgument("stft expects a mono buffer");
  return stft_magnitude(mono.channel(0), n_fft, hop);
}

std::vector<double> mel_center_frequencies(int n_mels, double fmin, double fmax) {
  const double lo = hz_to_mel(fmin);
  const double hi = hz_to_mel(fmax);
  std::vector<double> hz(static_cast<std::size_t>(n_mels) + 2);
  for (std::size_t i = 0; i < hz.size(); ++i) {
    hz[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (n_mels + 1));
  }
  return std::vector<double>(hz.begin() + 1, hz.end() - 1);
}

Matrix build_mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax) {
  if (n_mels < 1) throw InvalidArgument("mel filterbank needs at least one band");
  if (n_fft < 2 || sample_rate <= 0) throw InvalidArgument("invalid FFT size or sample rate");
  const double nyquist = 0.5 * sample_rate;
  if (fmax <= 0.0) fmax = nyquist;
  if (fmax > nyquist || fmin < 0.0 || fmin >= fmax) {
    throw InvalidArgument("mel filterbank frequency range must satisfy 0 <= fmin < fmax <= Nyquist");
  }
  const std::size_t bins = static_cast<std::size_t>(n_fft) / 2 + 1;
  const double lo = hz_to_mel(fmin);
  const double hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (n_mels + 1));
  }
  Matrix fb(static_cast<std::size_t>(n_mels), bins);
  for (std::size_t m = 0; m < fb.rows; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      const double rise = (f - left) / (center - left);
      const double fall = (right - f) / (right - center);
      fb(m, k) = std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

MelSpectrogram mel_spectrogram(const AudioBuffer& mono, const FrontendConfig& config) {
  if (mono.channel_count() != 1) throw InvalidArgument("mel_spectrogram expects mono audio");
  if (mono.sample_rate() != config.sample_rate) {
    throw InvalidArgument("mel_spectrogram expects " + std::to_string(config.sample_rate) +
                          " Hz audio, got " + std::to_string(mono.sample_rate()));
  }
  if (mono.empty()) throw InvalidArgument("mel_spectrogram: empty buffer");
  const Matrix mag = stft_magnitude(mono, config.n_fft, config.hop);
  const Matrix fb =
      build_mel_filterbank(config.n_mels, config.n_fft, config.sample_rate, config.fmin, config.fmax);

  Matrix logmel(fb.rows, mag.cols);
  for (std::size_t m = 0; m < fb.rows; ++m) {
    for (std::size_t t = 0; t < mag.cols; ++t) {
      double acc = 0.0;
      for (std::size_t k = 0; k < fb.cols; ++k) {
        const double w = fb(m, k);
        if (w != 0.0) acc += w * mag(k, t);
      }
      logmel(m, t) = std::log(acc + config.log_floor);
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(logmel.data.begin(), logmel.data.end());
  const double lo = *lo_it, hi = *hi_it;

  MelSpectrogram out;
  out.bands = logmel.rows;
  out.frames = logmel.cols;
  out.sample_rate = config.sample_rate;
  out.hop = config.hop;
  out.values.resize(logmel.data.size());
  if (hi - lo <= 0.0) {
    std::fill(out.values.begin(), out.values.end(), 0.0f);
  } else {
    for (std::size_t i = 0; i < logmel.data.size(); ++i) {
      const double v = 2.0 * (logmel.data[i] - lo) / (hi - lo) - 1.0;
      out.values[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
    }
  }
  return out;
}

MelSpectrogram fit_frames(const MelSpectrogram& spec, std::size_t target_frames) {
  if (target_frames < 1) throw InvalidArgument("fit_frames: target must be at least one frame");
  MelSpectrogram out = spec;
  out.frames = target_frames;
  out.values.assign(spec.bands * target_frames, -1.0f);
  if (spec.frames >= target_frames) {
    const std::size_t offset = (spec.frames - target_frames) / 2;
    for (std::size_t b = 0; b < spec.bands; ++b) {
      for (std::size_t t = 0; t < target_frames; ++t) {
        out.values[b * target_frames + t] = spec.at(b, offset + t);
      }
    }
  } else {
    const std::size_t left = (target_frames - spec.frames) / 2;
    for (std::size_t b = 0; b < spec.bands; ++b) {
      for (std::size_t t = 0; t < spec.frames; ++t) {
        out.values[b * target_frames + left + t] = spec.at(b, t);
      }
    }
  }
  return out;
}

void write_mel(const MelSpectrogram& spec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMelMagic, sizeof(kMelMagic));
  const std::uint32_t header[4] = {static_cast<std::uint32_t>(spec.bands),
                                   static_cast<std::uint32_t>(spec.frames),
                                   static_cast<std::uint32_t>(spec.sample_rate),
                                   static_cast<std::uint32_t>(spec.hop)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(spec.values.data()),
            static_cast<std::streamsize>(spec.values.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path.string());
}

MelSpectrogram read_mel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  std::uint32_t header[4];
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, kMelMagic, sizeof(magic)) != 0) {
    throw FormatError(path.string() + ": not a mel spectrogram file");
  }
  MelSpectrogram spec;
  spec.bands = header[0];
  spec.frames = header[1];
  spec.sample_rate = static_cast<int>(header[2]);
  spec.hop = static_cast<int>(header[3]);
  spec.values.resize(spec.bands * spec.frames);
  in.read(reinterpret_cast<char*>(spec.values.data()),
          static_cast<std::streamsize>(spec.values.size() * sizeof(float)));
  if (!in) throw FormatError(path.string() + ": truncated mel spectrogram payload");
  spec.source_id = path.stem().string();
  return spec;
}

}  // namespace pmqa
