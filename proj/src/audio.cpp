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

#include "pmqa/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <string>

#include "pmqa/error.hpp"

namespace pmqa {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
// Kernel span, in samples of the lower of the two rates.
constexpr int kTapsPerPhase = 32;
constexpr double kStopbandEdge = 0.45;          // fraction of the lower rate
constexpr double kStopbandAttenuationDb = 60.0;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

double kaiser(double x, double beta) {
  // x in [-1, 1]
  const double r = 1.0 - x * x;
  if (r <= 0.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(r)) / std::cyl_bessel_i(0.0, beta);
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

AudioBuffer::AudioBuffer(std::vector<std::vector<double>> channels, int sample_rate)
    : channels_(std::move(channels)), sample_rate_(sample_rate) {
  if (sample_rate_ <= 0) throw InvalidArgument("sample rate must be positive");
  if (channels_.empty()) throw InvalidArgument("audio buffer needs at least one channel");
  for (const auto& c : channels_) {
    if (c.size() != channels_.front().size()) {
      throw ShapeError("all channels of an audio buffer must have equal length");
    }
  }
}

AudioBuffer AudioBuffer::Mono(std::vector<double> samples, int sample_rate) {
  std::vector<std::vector<double>> ch;
  ch.push_back(std::move(samples));
  return AudioBuffer(std::move(ch), sample_rate);
}

AudioBuffer AudioBuffer::Silence(std::size_t channels, std::size_t length, int sample_rate) {
  return AudioBuffer(std::vector<std::vector<double>>(channels, std::vector<double>(length, 0.0)),
                     sample_rate);
}

double AudioBuffer::duration_seconds() const {
  if (sample_rate_ <= 0) return 0.0;
  return static_cast<double>(length()) / sample_rate_;
}

AudioBuffer decode_wav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw WavError(WavErrc::kMalformedHeader, "not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) {
        throw WavError(WavErrc::kMalformedHeader, "fmt chunk too short");
      }
      const unsigned char* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      block_align = read_u16(f + 12);
      bits = read_u16(f + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw WavError(WavErrc::kMalformedHeader, "data chunk before fmt chunk");
      if (format != kFormatPcm) {
        throw WavError(WavErrc::kUnsupportedFormat,
                       "unsupported WAV codec (format tag " + std::to_string(format) + ")");
      }
      if (bits != 16 && bits != 24) {
        throw WavError(WavErrc::kUnsupportedFormat,
                       "unsupported bit depth " + std::to_string(bits));
      }
      if (channels < 1 || channels > 2) {
        throw WavError(WavErrc::kUnsupportedFormat,
                       "unsupported channel count " + std::to_string(channels));
      }
      if (rate == 0) throw WavError(WavErrc::kMalformedHeader, "zero sample rate");
      const std::size_t bytes_per_sample = bits / 8;
      if (block_align != channels * bytes_per_sample) {
        throw WavError(WavErrc::kMalformedHeader, "inconsistent block alignment");
      }
      if (body + size > bytes.size() || size % block_align != 0) {
        throw WavError(WavErrc::kTruncatedData, "data chunk is truncated");
      }
      const std::size_t frames = size / block_align;
      std::vector<std::vector<double>> out(channels, std::vector<double>(frames));
      const unsigned char* d = bytes.data() + body;
      for (std::size_t i = 0; i < frames; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
          const unsigned char* s = d + i * block_align + c * bytes_per_sample;
          if (bits == 16) {
            const auto v = static_cast<std::int16_t>(read_u16(s));
            out[c][i] = v / 32768.0;
          } else {
            std::int32_t v = s[0] | (s[1] << 8) | (s[2] << 16);
            if (v & 0x800000) v -= 0x1000000;
            out[c][i] = v / 8388608.0;
          }
        }
      }
      return AudioBuffer(std::move(out), static_cast<int>(rate));
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) throw WavError(WavErrc::kMalformedHeader, "missing fmt chunk");
  throw WavError(WavErrc::kTruncatedData, "missing data chunk");
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(WavErrc::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const WavError& e) {
    throw WavError(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<unsigned char> encode_wav(const AudioBuffer& buffer, int bit_depth) {
  if (bit_depth != 16 && bit_depth != 24) {
    throw InvalidArgument("bit depth must be 16 or 24");
  }
  if (buffer.channel_count() == 0) throw InvalidArgument("cannot encode an empty buffer");
  const std::size_t bytes_per_sample = static_cast<std::size_t>(bit_depth / 8);
  const std::size_t channels = buffer.channel_count();
  const std::size_t frames = buffer.length();
  const std::size_t data_size = frames * channels * bytes_per_sample;
  const double full_scale = bit_depth == 16 ? 32768.0 : 8388608.0;
  const double max_word = full_scale - 1.0;

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(36 + data_size));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate()));
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate() * channels * bytes_per_sample));
  put_u16(out, static_cast<std::uint16_t>(channels * bytes_per_sample));
  put_u16(out, static_cast<std::uint16_t>(bit_depth));
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(data_size));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double x = buffer.channel(c)[i];
      if (!std::isfinite(x)) throw InvalidArgument("cannot encode non-finite amplitude");
      const double word = std::clamp(std::round(x * full_scale), -full_scale, max_word);
      const auto v = static_cast<std::int32_t>(word);
      out.push_back(static_cast<unsigned char>(v & 0xff));
      out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
      if (bit_depth == 24) out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    }
  }
  return out;
}

void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path, int bit_depth) {
  const auto bytes = encode_wav(buffer, bit_depth);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WavError(WavErrc::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WavError(WavErrc::kIo, "write failed: " + path.string());
}

AudioBuffer downmix_to_mono(const AudioBuffer& buffer) {
  const std::size_t n = buffer.length();
  const auto channels = static_cast<double>(buffer.channel_count());
  std::vector<double> mono(n, 0.0);
  for (const auto& ch : buffer.channels()) {
    for (std::size_t i = 0; i < n; ++i) mono[i] += ch[i];
  }
  if (buffer.channel_count() > 1) {
    for (double& v : mono) v /= channels;
  }
  return AudioBuffer::Mono(std::move(mono), buffer.sample_rate());
}

AudioBuffer resample(const AudioBuffer& buffer, int target_rate) {
  const int source_rate = buffer.sample_rate();
  if (target_rate <= 0 || source_rate <= 0) {
    throw InvalidArgument("resample: sample rates must be positive");
  }
  if (target_rate == source_rate) return buffer;

  const long long g = std::gcd(source_rate, target_rate);
  const long long up = target_rate / g;    // L
  const long long down = source_rate / g;  // M
  const double ratio = static_cast<double>(source_rate) / target_rate;

  // Lowpass designed in input-sample units. The kernel spans kTapsPerPhase
  // periods of the lower rate; the stopband begins at kStopbandEdge of it.
  const double half_width = 0.5 * kTapsPerPhase * std::max(1.0, ratio);
  const double min_rate = std::min(source_rate, target_rate);
  const double transition =
      (kStopbandAttenuationDb - 7.95) / (2.285 * 2.0 * std::numbers::pi * 2.0 * half_width);
  const double cutoff = kStopbandEdge * min_rate / source_rate - 0.5 * transition;
  const double beta = 0.1102 * (kStopbandAttenuationDb - 8.7);

  // One normalized tap set per output phase.
  const int taps = 2 * static_cast<int>(std::ceil(half_width));
  std::vector<std::vector<double>> phases(static_cast<std::size_t>(up));
  for (long long p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / up;
    auto& h = phases[static_cast<std::size_t>(p)];
    h.resize(static_cast<std::size_t>(taps));
    double sum = 0.0;
    for (int j = 0; j < taps; ++j) {
      // tap j touches input index base + j - taps/2 + 1
      const double offset = frac - (j - taps / 2 + 1);
      const double w = std::abs(offset) <= half_width ? kaiser(offset / half_width, beta) : 0.0;
      h[static_cast<std::size_t>(j)] = 2.0 * cutoff * sinc(2.0 * cutoff * offset) * w;
      sum += h[static_cast<std::size_t>(j)];
    }
    for (double& v : h) v /= sum;
  }

  const auto in_len = static_cast<long long>(buffer.length());
  const auto out_len = static_cast<long long>(
      std::llround(static_cast<double>(in_len) * target_rate / source_rate));
  std::vector<std::vector<double>> out(buffer.channel_count(),
                                       std::vector<double>(static_cast<std::size_t>(out_len)));
  for (std::size_t c = 0; c < buffer.channel_count(); ++c) {
    const auto x = buffer.channel(c);
    auto& y = out[c];
    for (long long n = 0; n < out_len; ++n) {
      const long long pos = n * down;
      const long long base = pos / up;
      const auto& h = phases[static_cast<std::size_t>(pos % up)];
      const long long first = base - taps / 2 + 1;
      double acc = 0.0;
      for (int j = 0; j < taps; ++j) {
        const long long k = first + j;
        if (k >= 0 && k < in_len) acc += h[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(k)];
      }
      y[static_cast<std::size_t>(n)] = acc;
    }
  }
  return AudioBuffer(std::move(out), target_rate);
}

AudioBuffer extract_segment(const AudioBuffer& buffer, double start_seconds,
                            double duration_seconds) {
  if (!(start_seconds >= 0.0) || !(duration_seconds >= 0.0)) {
    throw InvalidArgument("segment start and duration must be non-negative");
  }
  const double rate = buffer.sample_rate();
  // The small bias keeps exact products such as 0.3 * 16000 from flooring down.
  const auto first = static_cast<std::size_t>(std::floor(start_seconds * rate + 1e-9));
  const auto count = static_cast<std::size_t>(std::floor(duration_seconds * rate + 1e-9));
  if (start_seconds + duration_seconds > buffer.duration_seconds() + 1e-9 ||
      first + count > buffer.length()) {
    throw InvalidArgument("segment exceeds buffer duration");
  }
  std::vector<std::vector<double>> out;
  out.reserve(buffer.channel_count());
  for (const auto& ch : buffer.channels()) {
    out.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(first),
                     ch.begin() + static_cast<std::ptrdiff_t>(first + count));
  }
  return AudioBuffer(std::move(out), buffer.sample_rate());
}

}  // namespace pmqa
