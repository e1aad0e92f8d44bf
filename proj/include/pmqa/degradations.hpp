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

#ifndef PMQA_DEGRADATIONS_HPP_
#define PMQA_DEGRADATIONS_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "pmqa/audio.hpp"

namespace pmqa {

enum class DegradationKind { kNone, kDistortion, kLowpass, kLimiter, kNoise };

// The four degradations, in the order variants are generated for a segment.
inline constexpr std::array<DegradationKind, 4> kDegradationKinds = {
    DegradationKind::kDistortion, DegradationKind::kLowpass, DegradationKind::kLimiter,
    DegradationKind::kNoise};

// "distortion", "lowpass", "limiter", "noise", "none".
std::string to_string(DegradationKind kind);
DegradationKind parse_degradation_kind(std::string_view name);

struct DegradationSpec {
  DegradationKind kind = DegradationKind::kNone;
  double intensity = 0.0;  // [0, 100]
  std::uint64_t seed = 0;  // noise only

  void validate() const;
};

// Native plugin parameter for an intensity: waveshape in percent, cutoff in
// Hz, limiter threshold in dB, noise level in dBFS RMS. Linear between the
// endpoint settings.
double intensity_to_param(DegradationKind kind, double intensity);

// tanh waveshaper, w(x) = tanh(g x) / tanh(g) with g = tan(pi/2 * shape).
AudioBuffer waveshape_distortion(const AudioBuffer& buffer, double intensity);

// 4th-order Butterworth as two cascaded biquads (bilinear, prewarped).
AudioBuffer butterworth_lowpass(const AudioBuffer& buffer, double intensity);
AudioBuffer butterworth_lowpass_hz(const AudioBuffer& buffer, double cutoff_hz);

// Instant attack, 100 ms release peak limiter with a hard-clip ceiling.
AudioBuffer limiter(const AudioBuffer& buffer, double intensity);

// Seeded pink noise scaled to the intensity's RMS level, one independent
// stream per channel.
AudioBuffer add_pink_noise(const AudioBuffer& buffer, double intensity, std::uint64_t seed);

// Pink noise of exactly `rms` RMS.
std::vector<double> pink_noise(std::size_t length, double rms, std::uint64_t seed);

// Dispatches to exactly one operator; kNone is the identity.
AudioBuffer apply(const AudioBuffer& buffer, const DegradationSpec& spec);

}  // namespace pmqa

#endif  // PMQA_DEGRADATIONS_HPP_
