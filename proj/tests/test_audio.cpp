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
#include "pmqa/audio.hpp"
#include "pmqa/error.hpp"

namespace pmqa {
namespace {

AudioBuffer sine(double hz, double seconds, int rate, double amp = 0.5) {
  std::vector<double> x(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  }
  return AudioBuffer::Mono(std::move(x), rate);
}

AudioBuffer random_stereo(std::size_t n, int rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> ch(2, std::vector<double>(n));
  for (auto& c : ch) {
    for (auto& v : c) v = u(rng);
  }
  return AudioBuffer(std::move(ch), rate);
}

TEST(AudioBuffer, RejectsRaggedChannels) {
  EXPECT_THROW(AudioBuffer({{0.0, 0.1}, {0.0}}, 48000), ShapeError);
  EXPECT_THROW(AudioBuffer({{0.0}}, 0), InvalidArgument);
}

class WavRoundTrip : public ::testing::TestWithParam<int> {};

TEST_P(WavRoundTrip, ErrorBoundedByHalfLsb) {
  const int bits = GetParam();
  const AudioBuffer in = random_stereo(1000, 44100, 3);
  const AudioBuffer out = decode_wav(encode_wav(in, bits));
  ASSERT_EQ(out.sample_rate(), 44100);
  ASSERT_EQ(out.channel_count(), 2u);
  ASSERT_EQ(out.length(), 1000u);
  const double lsb = std::ldexp(1.0, -(bits - 1));
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < out.length(); ++i) {
      const double expected = std::min(in.channel(c)[i], 1.0 - lsb);
      EXPECT_LE(std::abs(out.channel(c)[i] - expected), 0.5 * lsb + 1e-12);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(BitDepths, WavRoundTrip, ::testing::Values(16, 24));

TEST(Wav, DecodedSamplesReencodeIdentically) {
  const auto bytes = encode_wav(random_stereo(257, 48000, 9), 24);
  EXPECT_EQ(encode_wav(decode_wav(bytes), 24), bytes);
}

TEST(Wav, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "pmqa_test_roundtrip.wav";
  const AudioBuffer in = sine(440.0, 0.1, 16000);
  write_wav(in, path, 16);
  const AudioBuffer out = read_wav(path);
  EXPECT_EQ(out.length(), in.length());
  std::filesystem::remove(path);
}

TEST(Wav, ErrorCodes) {
  const auto expect_code = [](std::vector<unsigned char> bytes, WavErrc code) {
    try {
      decode_wav(bytes);
      FAIL() << "decode accepted a bad file";
    } catch (const WavError& e) {
      EXPECT_EQ(e.code(), code) << e.what();
    }
  };
  expect_code({'n', 'o', 'p', 'e'}, WavErrc::kMalformedHeader);

  auto good = encode_wav(sine(440.0, 0.01, 8000), 16);
  auto truncated = good;
  truncated.resize(truncated.size() - 3);
  expect_code(truncated, WavErrc::kTruncatedData);

  auto float_codec = good;
  float_codec[20] = 3;  // format tag
  expect_code(float_codec, WavErrc::kUnsupportedFormat);

  try {
    read_wav("/nonexistent/pmqa.wav");
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.code(), WavErrc::kIo);
  }
}

TEST(Audio, DownmixAveragesChannels) {
  const AudioBuffer st({{1.0, 0.5}, {0.0, -0.5}}, 8000);
  const AudioBuffer m = downmix_to_mono(st);
  ASSERT_EQ(m.channel_count(), 1u);
  EXPECT_DOUBLE_EQ(m.channel(0)[0], 0.5);
  EXPECT_DOUBLE_EQ(m.channel(0)[1], 0.0);
}

TEST(Audio, ResampleLength) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 5000)(rng);
    const AudioBuffer in = AudioBuffer::Silence(1, n, 44100);
    EXPECT_EQ(resample(in, 16000).length(),
              static_cast<std::size_t>(std::llround(n * 16000.0 / 44100.0)));
  }
}

TEST(Audio, ResamplePassbandSine) {
  for (const int source : {48000, 44100, 22050}) {
    for (const double hz : {100.0, 1000.0, 5000.0}) {
      const AudioBuffer out = resample(sine(hz, 1.0, source, 0.5), 16000);
      const auto x = out.channel(0).subspan(2000, 12000);
      EXPECT_NEAR(testing::sine_amplitude(x, hz, 16000) / 0.5, 1.0, 0.01) << source << " " << hz;
    }
  }
}

TEST(Audio, ResampleStopbandAttenuates) {
  const AudioBuffer out = resample(sine(12000.0, 1.0, 48000, 0.5), 16000);
  double energy = 0.0;
  for (double v : out.channel(0).subspan(2000, 12000)) energy += v * v;
  EXPECT_LT(std::sqrt(energy / 12000.0), 0.5 * 1e-2);
}

TEST(Audio, UpsampleIsAlsoBandLimited) {
  const AudioBuffer out = resample(sine(1000.0, 0.5, 16000), 48000);
  const auto x = out.channel(0).subspan(4000, 16000);
  EXPECT_NEAR(testing::sine_amplitude(x, 1000.0, 48000), 0.5, 0.005);
}

TEST(Audio, ExtractSegmentIsSampleExact) {
  std::vector<double> ramp(48000);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i) / 48000.0;
  const AudioBuffer a = AudioBuffer::Mono(ramp, 48000);
  const AudioBuffer s = extract_segment(a, 0.25, 0.5);
  ASSERT_EQ(s.length(), 24000u);
  EXPECT_DOUBLE_EQ(s.channel(0)[0], ramp[12000]);
  EXPECT_THROW(extract_segment(a, 0.8, 0.5), InvalidArgument);
}

}  // namespace
}  // namespace pmqa
