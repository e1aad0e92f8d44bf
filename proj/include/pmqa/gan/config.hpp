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

#ifndef PMQA_GAN_CONFIG_HPP_
#define PMQA_GAN_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pmqa::gan {

// Genre names of the full catalog, in label order.
inline constexpr std::array<std::string_view, 13> kGenreNames = {
    "Acoustic", "Blues",   "Classical", "Country", "Electronica & Dance", "Funk", "Hip-hop",
    "Jazz",     "Latin",   "Pop",       "Reggae",  "Soul",                "Rock"};

// Returns the label of a catalog genre name, or -1.
int genre_id(std::string_view name);

struct GanConfig {
  std::string profile = "toy";
  int bands = 64;
  int frames = 64;
  int z_dim = 32;
  int channel_multiplier = 16;
  int n_genres = 2;
  int batch_size = 8;
  double lr_g = 1e-4;
  double lr_d = 2e-4;
  int d_steps_per_g = 2;
  // Spatial size after which a self-attention layer is inserted; 0 disables.
  int attention_resolution = 16;
  std::uint64_t seed = 0;
  // Run length and bookkeeping.
  std::int64_t steps = 2000;
  std::int64_t checkpoint_every = 500;
  std::int64_t log_every = 10;

  // Throws InvalidArgument naming the first bad field.
  void validate() const;
};

// 64x64 mels, multiplier 16, z 32, attention at 16x16, two genres.
GanConfig toy_config();
// Full-scale model: 256x256 mels, multiplier 64, z 120, attention at 32x32,
// 13 genres. Selected by the profile name "paper".
GanConfig full_config();
GanConfig profile_config(std::string_view profile);

// Channel multipliers per block boundary. The generator plan lists the input
// width of every up block followed by the final width; the discriminator plan
// lists every block's output width (all blocks downsample except the last).
std::vector<int> generator_channel_plan(int resolution);
std::vector<int> discriminator_channel_plan(int resolution);

// "key = value" lines; '#' starts a comment. Unknown keys are errors.
void apply_key_values(GanConfig& config, std::string_view text);
void set_config_value(GanConfig& config, std::string_view key, std::string_view value);
std::string to_key_values(const GanConfig& config);

// FNV-1a over the architecture-defining fields, as 16 hex digits.
std::string config_digest(const GanConfig& config);

}  // namespace pmqa::gan

#endif  // PMQA_GAN_CONFIG_HPP_
