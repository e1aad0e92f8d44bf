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

#include "pmqa/gan/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "pmqa/error.hpp"

namespace pmqa::gan {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename N>
N parse_number(std::string_view key, std::string_view value) {
  N out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument("config key '" + std::string(key) + "': cannot parse '" +
                          std::string(value) + "'");
  }
  return out;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

int genre_id(std::string_view name) {
  for (std::size_t i = 0; i < kGenreNames.size(); ++i) {
    if (kGenreNames[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void GanConfig::validate() const {
  const auto fail = [](const std::string& what) { throw InvalidArgument("config: " + what); };
  if (bands <= 0 || frames <= 0) fail("bands and frames must be positive");
  if (bands != frames) fail("bands and frames must be equal (square spectrogram patches)");
  if (!is_power_of_two(bands) || bands < 16) fail("bands must be a power of two >= 16");
  generator_channel_plan(bands);  // throws for unsupported sizes
  if (z_dim <= 0) fail("z_dim must be positive");
  if (channel_multiplier <= 0) fail("channel_multiplier must be positive");
  if (n_genres <= 0) fail("n_genres must be positive");
  if (batch_size <= 1) fail("batch_size must be at least 2 (batch statistics)");
  if (!(lr_g > 0) || !(lr_d > 0)) fail("learning rates must be positive");
  if (d_steps_per_g < 1) fail("d_steps_per_g must be >= 1");
  if (attention_resolution < 0 || (attention_resolution > 0 && !is_power_of_two(attention_resolution))) {
    fail("attention_resolution must be 0 or a power of two");
  }
  if (steps < 0) fail("steps must be non-negative");
  if (checkpoint_every <= 0) fail("checkpoint_every must be positive");
  if (log_every <= 0) fail("log_every must be positive");
}

GanConfig toy_config() { return GanConfig{}; }

GanConfig full_config() {
  GanConfig c;
  c.profile = "paper";
  c.bands = 256;
  c.frames = 256;
  c.z_dim = 120;
  c.channel_multiplier = 64;
  c.n_genres = 13;
  c.attention_resolution = 32;
  c.steps = 100000;
  c.checkpoint_every = 2000;
  return c;
}

GanConfig profile_config(std::string_view profile) {
  if (profile == "toy") return toy_config();
  if (profile == "paper") return full_config();
  throw InvalidArgument("unknown profile '" + std::string(profile) + "' (expected toy or paper)");
}

std::vector<int> generator_channel_plan(int resolution) {
  switch (resolution) {
    case 16: return {4, 2, 1};
    case 32: return {4, 4, 2, 1};
    case 64: return {4, 4, 2, 1, 1};
    case 128: return {16, 16, 8, 4, 2, 1};
    case 256: return {16, 16, 8, 8, 4, 2, 1};
    case 512: return {16, 16, 8, 8, 4, 2, 1, 1};
    default: break;
  }
  throw InvalidArgument("no channel plan for resolution " + std::to_string(resolution));
}

std::vector<int> discriminator_channel_plan(int resolution) {
  switch (resolution) {
    case 16: return {1, 2, 2};
    case 32: return {1, 2, 4, 4};
    case 64: return {1, 2, 4, 4, 4};
    case 128: return {1, 2, 4, 8, 16, 16};
    case 256: return {1, 2, 4, 8, 8, 16, 16};
    case 512: return {1, 1, 2, 4, 8, 8, 16, 16};
    default: break;
  }
  throw InvalidArgument("no channel plan for resolution " + std::to_string(resolution));
}

void set_config_value(GanConfig& c, std::string_view key, std::string_view value) {
  if (key == "profile") {
    c.profile = std::string(value);
  } else if (key == "bands") {
    c.bands = parse_number<int>(key, value);
  } else if (key == "frames") {
    c.frames = parse_number<int>(key, value);
  } else if (key == "z_dim") {
    c.z_dim = parse_number<int>(key, value);
  } else if (key == "channel_multiplier") {
    c.channel_multiplier = parse_number<int>(key, value);
  } else if (key == "n_genres") {
    c.n_genres = parse_number<int>(key, value);
  } else if (key == "batch_size") {
    c.batch_size = parse_number<int>(key, value);
  } else if (key == "lr_g") {
    c.lr_g = parse_number<double>(key, value);
  } else if (key == "lr_d") {
    c.lr_d = parse_number<double>(key, value);
  } else if (key == "d_steps_per_g") {
    c.d_steps_per_g = parse_number<int>(key, value);
  } else if (key == "attention_resolution") {
    c.attention_resolution = parse_number<int>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "steps") {
    c.steps = parse_number<std::int64_t>(key, value);
  } else if (key == "checkpoint_every") {
    c.checkpoint_every = parse_number<std::int64_t>(key, value);
  } else if (key == "log_every") {
    c.log_every = parse_number<std::int64_t>(key, value);
  } else {
    throw InvalidArgument("unknown config key '" + std::string(key) + "'");
  }
}

void apply_key_values(GanConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string to_key_values(const GanConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "profile = " << c.profile << '\n'
     << "bands = " << c.bands << '\n'
     << "frames = " << c.frames << '\n'
     << "z_dim = " << c.z_dim << '\n'
     << "channel_multiplier = " << c.channel_multiplier << '\n'
     << "n_genres = " << c.n_genres << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "lr_g = " << c.lr_g << '\n'
     << "lr_d = " << c.lr_d << '\n'
     << "d_steps_per_g = " << c.d_steps_per_g << '\n'
     << "attention_resolution = " << c.attention_resolution << '\n'
     << "seed = " << c.seed << '\n'
     << "steps = " << c.steps << '\n'
     << "checkpoint_every = " << c.checkpoint_every << '\n'
     << "log_every = " << c.log_every << '\n';
  return os.str();
}

std::string config_digest(const GanConfig& c) {
  std::ostringstream os;
  os << c.bands << ',' << c.frames << ',' << c.z_dim << ',' << c.channel_multiplier << ','
     << c.n_genres << ',' << c.attention_resolution;
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pmqa::gan
