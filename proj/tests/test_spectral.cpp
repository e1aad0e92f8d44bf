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
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pmqa/error.hpp"
#include "pmqa/spectral.hpp"

namespace pmqa {
namespace {

AudioBuffer noise(std::size_t n, int rate, double gain, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = gain * g(rng);
  return AudioBuffer::Mono(std::move(x), rate);
}

TEST(Stft, FrameCountFormula) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 200000)(rng);
    const int hop = std::uniform_int_distribution<int>(1, 1024)(rng);
    EXPECT_EQ(stft_frame_count(n, hop), 1 + n / static_cast<std::size_t>(hop));
  }
}

TEST(Stft, MatrixShapeMatchesFormula) {
  for (std::size_t n : {1025u, 2048u, 5000u, 16000u}) {
    const Matrix m = stft_magnitude(noise(n, 16000, 0.1, n).channel(0), 2048, 256);
    EXPECT_EQ(m.rows, 1025u);
    EXPECT_EQ(m.cols, stft_frame_count(n, 256));
  }
}

TEST(Stft, SinePeaksInExpectedBin) {
  std::vector<double> x(16000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * 1000.0 * i / 16000.0);
  const Matrix m = stft_magnitude(x, 2048, 256);
  for (std::size_t t = 4; t < m.cols - 4; ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < m.rows; ++k) {
      if (m(k, t) > m(best, t)) best = k;
    }
    EXPECT_EQ(best, 128u);
  }
}

TEST(Stft, InteriorFrameMatchesDirectDft) {
  const AudioBuffer a = noise(8192, 16000, 0.3, 2);
  const Matrix m = stft_magnitude(a.channel(0), 512, 128);
  // Frame t is centred on t * hop; frame 10 covers [1280 - 256, 1280 + 256).
  std::vector<double> frame(512);
  for (std::size_t i = 0; i < 512; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / 512.0);
    frame[i] = a.channel(0)[1280 - 256 + i] * w;
  }
  const auto power = testing::dft_power(frame);
  for (std::size_t k = 0; k < power.size(); ++k) EXPECT_NEAR(m(k, 10), std::sqrt(power[k]), 1e-9);
}

TEST(MelFilterbank, ShapeAndSupport) {
  const Matrix fb = build_mel_filterbank(256, 2048, 16000, 0.0, 8000.0);
  ASSERT_EQ(fb.rows, 256u);
  ASSERT_EQ(fb.cols, 1025u);
  for (std::size_t m = 0; m < fb.rows; ++m) {
    std::size_t first = fb.cols, last = 0, nonzero = 0;
    for (std::size_t k = 0; k < fb.cols; ++k) {
      ASSERT_GE(fb(m, k), 0.0);
      if (fb(m, k) > 0.0) {
        first = std::min(first, k);
        last = k;
        ++nonzero;
      }
    }
    ASSERT_GT(nonzero, 0u) << "empty filter " << m;
    EXPECT_EQ(last - first + 1, nonzero) << "non-contiguous filter " << m;
  }
}

TEST(MelFilterbank, CentersIncreaseOnMelScale) {
  const auto c = mel_center_frequencies(64, 0.0, 8000.0);
  for (std::size_t i = 1; i < c.size(); ++i) {
    EXPECT_GT(c[i], c[i - 1]);
    EXPECT_NEAR(hz_to_mel(c[i]) - hz_to_mel(c[i - 1]), hz_to_mel(c[1]) - hz_to_mel(c[0]), 1e-9);
  }
  EXPECT_NEAR(mel_to_hz(hz_to_mel(1234.5)), 1234.5, 1e-9);
  EXPECT_NEAR(hz_to_mel(1000.0), 1000.0, 0.5);
}

TEST(MelSpectrogram, GainInvariant) {
  FrontendConfig fc;
  const MelSpectrogram a = mel_spectrogram(noise(16000, 16000, 0.05, 3), fc);
  const MelSpectrogram b = mel_spectrogram(noise(16000, 16000, 0.6, 3), fc);
  ASSERT_EQ(a.values.size(), b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-5);
}

TEST(MelSpectrogram, RangeAndShape) {
  FrontendConfig fc;
  fc.n_mels = 64;
  const MelSpectrogram m = mel_spectrogram(noise(4000, 16000, 0.1, 4), fc);
  EXPECT_EQ(m.bands, 64u);
  EXPECT_EQ(m.frames, stft_frame_count(4000, 256));
  const auto [lo, hi] = std::minmax_element(m.values.begin(), m.values.end());
  EXPECT_FLOAT_EQ(*lo, -1.0f);
  EXPECT_FLOAT_EQ(*hi, 1.0f);
}

TEST(MelSpectrogram, RejectsWrongRateOrChannels) {
  EXPECT_THROW(mel_spectrogram(noise(4000, 48000, 0.1, 1)), InvalidArgument);
  EXPECT_THROW(mel_spectrogram(AudioBuffer::Silence(2, 4000, 16000)), InvalidArgument);
}

TEST(FitFrames, CropsCenterAndPadsWithMinusOne) {
  MelSpectrogram s;
  s.bands = 1;
  s.frames = 5;
  s.values = {0, 1, 2, 3, 4};
  const auto crop = fit_frames(s, 3);
  EXPECT_EQ(crop.values, (std::vector<float>{1, 2, 3}));
  const auto pad = fit_frames(s, 8);
  EXPECT_EQ(pad.values, (std::vector<float>{-1, 0, 1, 2, 3, 4, -1, -1}));
}

TEST(MelFile, RoundTrip) {
  FrontendConfig fc;
  fc.n_mels = 32;
  const MelSpectrogram m = mel_spectrogram(noise(3000, 16000, 0.1, 5), fc);
  const auto path = std::filesystem::temp_directory_path() / "pmqa_test.mel";
  write_mel(m, path);
  const MelSpectrogram r = read_mel(path);
  EXPECT_EQ(r.bands, m.bands);
  EXPECT_EQ(r.frames, m.frames);
  EXPECT_EQ(r.values, m.values);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace pmqa
