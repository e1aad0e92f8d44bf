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

#ifndef PMQA_GAN_DATA_HPP_
#define PMQA_GAN_DATA_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmqa/ad/nn.hpp"
#include "pmqa/audio.hpp"
#include "pmqa/gan/config.hpp"

namespace pmqa::gan {

struct TrainingTrack {
  std::string id;
  int genre = 0;
  AudioBuffer audio;
};

// Downmixes to mono and resamples to `sample_rate`.
TrainingTrack prepare_track(const TrainingTrack& track, int sample_rate = 16000);

// One epoch of track indices: every genre contributes the same number of
// tracks (the smallest genre's count), each track at most once, in a seeded
// random order. Throws InvalidArgument if a genre has no tracks.
std::vector<std::size_t> balanced_epoch(std::span<const int> genres, int n_genres, ad::Rng& rng);

// Draws training spectrograms: tracks in balanced-epoch order, one uniformly
// placed segment of (frames - 1) * hop samples per draw, turned into a
// normalized log-mel patch of bands x frames.
class SegmentSampler {
 public:
  // Tracks must already be mono at 16 kHz (see prepare_track).
  SegmentSampler(std::vector<TrainingTrack> tracks, const GanConfig& config, std::uint64_t seed);

  // Appends `count` patches (band-major) to `values` and their genres.
  void draw(std::size_t count, std::vector<float>& values, std::vector<int>& genres);

  std::size_t epoch_size() const { return epoch_size_; }
  std::int64_t epochs_started() const { return epochs_started_; }
  std::size_t segment_samples() const { return segment_samples_; }
  const std::vector<TrainingTrack>& tracks() const { return tracks_; }

 private:
  std::vector<TrainingTrack> tracks_;
  std::vector<int> genres_;
  GanConfig config_;
  ad::Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_size_ = 0;
  std::int64_t epochs_started_ = 0;
  std::size_t segment_samples_ = 0;
};

}  // namespace pmqa::gan

#endif  // PMQA_GAN_DATA_HPP_
