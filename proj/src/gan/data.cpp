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

#include "pmqa/gan/data.hpp"

#include <algorithm>

#include "pmqa/error.hpp"
#include "pmqa/spectral.hpp"

namespace pmqa::gan {

TrainingTrack prepare_track(const TrainingTrack& track, int sample_rate) {
  TrainingTrack out{track.id, track.genre, downmix_to_mono(track.audio)};
  if (out.audio.sample_rate() != sample_rate) out.audio = resample(out.audio, sample_rate);
  return out;
}

std::vector<std::size_t> balanced_epoch(std::span<const int> genres, int n_genres, ad::Rng& rng) {
  if (n_genres <= 0) throw InvalidArgument("balanced_epoch: n_genres must be positive");
  std::vector<std::vector<std::size_t>> by_genre(static_cast<std::size_t>(n_genres));
  for (std::size_t i = 0; i < genres.size(); ++i) {
    if (genres[i] < 0 || genres[i] >= n_genres) {
      throw InvalidArgument("track " + std::to_string(i) + " has genre id " +
                            std::to_string(genres[i]) + " outside [0, " + std::to_string(n_genres) + ")");
    }
    by_genre[static_cast<std::size_t>(genres[i])].push_back(i);
  }
  std::size_t per_genre = genres.size();
  for (int g = 0; g < n_genres; ++g) {
    if (by_genre[static_cast<std::size_t>(g)].empty()) {
      throw InvalidArgument("genre " + std::to_string(g) + " has no tracks");
    }
    per_genre = std::min(per_genre, by_genre[static_cast<std::size_t>(g)].size());
  }
  std::vector<std::size_t> epoch;
  epoch.reserve(per_genre * static_cast<std::size_t>(n_genres));
  for (auto& members : by_genre) {
    std::shuffle(members.begin(), members.end(), rng);
    epoch.insert(epoch.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(per_genre));
  }
  std::shuffle(epoch.begin(), epoch.end(), rng);
  return epoch;
}

SegmentSampler::SegmentSampler(std::vector<TrainingTrack> tracks, const GanConfig& config,
                               std::uint64_t seed)
    : tracks_(std::move(tracks)), config_(config), rng_(seed) {
  if (tracks_.empty()) throw InvalidArgument("training set is empty");
  for (const auto& t : tracks_) {
    if (t.audio.channel_count() != 1 || t.audio.sample_rate() != 16000) {
      throw InvalidArgument("track '" + t.id + "' is not mono 16 kHz; call prepare_track first");
    }
    if (t.audio.empty()) throw InvalidArgument("track '" + t.id + "' is empty");
    genres_.push_back(t.genre);
  }
  segment_samples_ = static_cast<std::size_t>(config_.frames - 1) * 256;
  order_ = balanced_epoch(genres_, config_.n_genres, rng_);
  epoch_size_ = order_.size();
  epochs_started_ = 1;
}

void SegmentSampler::draw(std::size_t count, std::vector<float>& values, std::vector<int>& genres) {
  FrontendConfig frontend;
  frontend.n_mels = config_.bands;
  for (std::size_t k = 0; k < count; ++k) {
    if (cursor_ == order_.size()) {
      order_ = balanced_epoch(genres_, config_.n_genres, rng_);
      cursor_ = 0;
      ++epochs_started_;
    }
    const TrainingTrack& track = tracks_[order_[cursor_++]];
    const auto& samples = track.audio.channels().front();
    const std::size_t len = std::min(segment_samples_, samples.size());
    std::uniform_int_distribution<std::size_t> start_dist(0, samples.size() - len);
    const std::size_t start = start_dist(rng_);
    const AudioBuffer segment = AudioBuffer::Mono(
        std::vector<double>(samples.begin() + static_cast<std::ptrdiff_t>(start),
                            samples.begin() + static_cast<std::ptrdiff_t>(start + len)),
        16000);
    const MelSpectrogram mel =
        fit_frames(mel_spectrogram(segment, frontend), static_cast<std::size_t>(config_.frames));
    values.insert(values.end(), mel.values.begin(), mel.values.end());
    genres.push_back(track.genre);
  }
}

}  // namespace pmqa::gan
