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

#ifndef PMQA_AUDIO_HPP_
#define PMQA_AUDIO_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace pmqa {

// Multichannel PCM audio with amplitudes in full-scale units ([-1, 1]).
// All channels have the same length.
class AudioBuffer {
 public:
  AudioBuffer() = default;
  AudioBuffer(std::vector<std::vector<double>> channels, int sample_rate);

  static AudioBuffer Mono(std::vector<double> samples, int sample_rate);
  static AudioBuffer Silence(std::size_t channels, std::size_t length,
                             int sample_rate);

  int sample_rate() const { return sample_rate_; }
  std::size_t channel_count() const { return channels_.size(); }
  // Samples per channel.
  std::size_t length() const {
    return channels_.empty() ? 0 : channels_.front().size();
  }
  double duration_seconds() const;
  bool empty() const { return length() == 0; }

  std::span<const double> channel(std::size_t c) const { return channels_.at(c); }
  std::span<double> channel(std::size_t c) { return channels_.at(c); }
  const std::vector<std::vector<double>>& channels() const { return channels_; }

 private:
  std::vector<std::vector<double>> channels_;
  int sample_rate_ = 0;
};

// RIFF/WAVE PCM (format tag 1), 16- or 24-bit, 1 or 2 channels. Errors are
// reported as WavError with a code distinguishing I/O, header, codec and
// truncation problems.
AudioBuffer read_wav(const std::filesystem::path& path);

// Amplitudes are clamped to [-1, 1 - 1 LSB] and rounded to the nearest
// integer word.
void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path,
               int bit_depth = 16);

// Serializes to an in-memory RIFF image; write_wav writes exactly these bytes.
std::vector<unsigned char> encode_wav(const AudioBuffer& buffer, int bit_depth);
AudioBuffer decode_wav(std::span<const unsigned char> bytes);

// Unweighted mean over channels.
AudioBuffer downmix_to_mono(const AudioBuffer& buffer);

// Windowed-sinc rational resampler. Output length is
// round(length * target_rate / source_rate).
AudioBuffer resample(const AudioBuffer& buffer, int target_rate);

// Sample-exact slice [floor(start * rate), + floor(duration * rate)).
AudioBuffer extract_segment(const AudioBuffer& buffer, double start_seconds,
                            double duration_seconds);

}  // namespace pmqa

#endif  // PMQA_AUDIO_HPP_
