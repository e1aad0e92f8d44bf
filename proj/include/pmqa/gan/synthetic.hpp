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

#ifndef PMQA_GAN_SYNTHETIC_HPP_
#define PMQA_GAN_SYNTHETIC_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "pmqa/audio.hpp"
#include "pmqa/gan/data.hpp"

namespace pmqa::gan {

// Procedural stand-ins for two musical genres, used by the toy profile:
// genre 0 is tonal (overlapping harmonic notes with smooth envelopes),
// genre 1 is percussive (short filtered noise bursts separated by silence).
inline constexpr int kSyntheticGenres = 2;
std::string synthetic_genre_name(int genre);

// Mono clip of `seconds` at `sample_rate`, peak-normalized to 0.5.
AudioBuffer synth_tonal(double seconds, int sample_rate, std::uint64_t seed);
AudioBuffer synth_percussive(double seconds, int sample_rate, std::uint64_t seed);
AudioBuffer synth_clip(int genre, double seconds, int sample_rate, std::uint64_t seed);

// tracks_per_genre tracks of each synthetic genre, generated at
// `sample_rate`; ids "syn<genre>_<index>". Deterministic in the seed.
std::vector<TrainingTrack> synthetic_corpus(int tracks_per_genre, double seconds,
                                            std::uint64_t seed, int sample_rate = 48000);

}  // namespace pmqa::gan

#endif  // PMQA_GAN_SYNTHETIC_HPP_
