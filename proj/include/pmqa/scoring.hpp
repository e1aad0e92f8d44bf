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

#ifndef PMQA_SCORING_HPP_
#define PMQA_SCORING_HPP_

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "pmqa/audio.hpp"
#include "pmqa/gan/trainer.hpp"
#include "pmqa/spectral.hpp"

namespace pmqa {

// The discriminator's input for a clip: downmix, resample to 16 kHz,
// log-mel with `bands` bands, then crop or pad to `frames`. Throws
// InvalidArgument if the 16 kHz clip is shorter than one STFT window.
MelSpectrogram score_input(const AudioBuffer& audio, int bands, int frames);

// Scores clips with a trained discriminator in evaluation mode. Scoring does
// not modify the model.
class Scorer {
 public:
  explicit Scorer(gan::LoadedModel model);
  static Scorer from_checkpoint(const std::filesystem::path& path);

  double score(const AudioBuffer& audio, int genre) const;
  double score(const MelSpectrogram& input, int genre) const;
  // Same values as calling score() per clip, evaluated in small batches.
  std::vector<double> score_batch(std::span<const AudioBuffer> clips, std::span<const int> genres) const;

  const gan::GanConfig& config() const { return model_.config; }
  gan::ProjectionDiscriminator<float>& discriminator() const { return *model_.discriminator; }

 private:
  std::vector<double> score_inputs(std::span<const MelSpectrogram> inputs,
                                   std::span<const int> genres) const;
  gan::LoadedModel model_;
};

// Label of a genre name under a model's configuration: catalog names when
// the model has the catalog's 13 genres, the synthetic names when it has
// two, otherwise (or additionally) a decimal label below n_genres.
int resolve_genre(const gan::GanConfig& config, std::string_view name);

// Mean squared sample difference over all channels.
double mse_measure(const AudioBuffer& reference, const AudioBuffer& degraded);

// Mean over STFT frames (2048 Hann, hop 512, centered) of the power
// spectrum's geometric / arithmetic mean ratio, power floored at 1e-10. At
// the clip's own rate every channel is analyzed and the results averaged;
// any other analysis rate downmixes and resamples first.
double spectral_flatness(const AudioBuffer& audio, int analysis_rate);

}  // namespace pmqa

#endif  // PMQA_SCORING_HPP_
