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

#ifndef PMQA_SPECTRAL_HPP_
#define PMQA_SPECTRAL_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pmqa/audio.hpp"

namespace pmqa {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct FrontendConfig {
  int sample_rate = 16000;
  int n_fft = 2048;
  int hop = 256;
  int n_mels = 256;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-6;
};

// Log-mel spectrogram rescaled to [-1, 1]; values are band-major
// (values[band * frames + frame]).
struct MelSpectrogram {
  std::size_t bands = 0;
  std::size_t frames = 0;
  std::vector<float> values;
  int sample_rate = 16000;
  int hop = 256;
  std::string source_id;

  float at(std::size_t band, std::size_t frame) const { return values[band * frames + frame]; }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Number of frames produced by a centered STFT: 1 + floor(length / hop).
std::size_t stft_frame_count(std::size_t length, int hop);

// Centered (reflect-padded) STFT with a periodic Hann window. Returns
// magnitudes shaped (n_fft / 2 + 1) x frames.
Matrix stft_magnitude(std::span<const double> samples, int n_fft = 2048, int hop = 256);
Matrix stft_magnitude(const AudioBuffer& mono, int n_fft = 2048, int hop = 256);

// Triangular filters on the HTK mel scale, peak weight 1. Shape
// n_mels x (n_fft / 2 + 1). fmax <= 0 selects the Nyquist frequency.
Matrix build_mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin = 0.0,
                            double fmax = 0.0);

// Center frequencies (Hz) of the filters built by build_mel_filterbank.
std::vector<double> mel_center_frequencies(int n_mels, double fmin, double fmax);

MelSpectrogram mel_spectrogram(const AudioBuffer& mono, const FrontendConfig& config = {});

// Center-crops or pads with -1 (left gets floor(pad / 2)).
MelSpectrogram fit_frames(const MelSpectrogram& spec, std::size_t target_frames);

// "PMQAMEL1" magic, then u32 bands, frames, sample_rate, hop, then
// bands * frames little-endian float32 values, band-major.
void write_mel(const MelSpectrogram& spec, const std::filesystem::path& path);
MelSpectrogram read_mel(const std::filesystem::path& path);

}  // namespace pmqa

#endif  // PMQA_SPECTRAL_HPP_
