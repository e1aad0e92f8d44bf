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

#ifndef PMQA_AD_CHECKPOINT_HPP_
#define PMQA_AD_CHECKPOINT_HPP_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pmqa/ad/tensor.hpp"

namespace pmqa::ad {

// Checkpoint container. A text index
//
//   PMQA-CHECKPOINT 1
//   meta <key> <value to end of line>
//   tensor <name> <offset> <count> <ndim> <dim>...
//   end
//
// is followed by the payload: the tensors as little-endian float32, `offset`
// and `count` in floats from the first byte after the "end" line.
struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<CheckpointTensor> tensors;

  void set_meta(const std::string& key, const std::string& value);
  // Throws FormatError if the key is missing.
  const std::string& meta_value(const std::string& key) const;
  const CheckpointTensor* find(const std::string& name) const;
  void add(std::string name, Shape shape, std::vector<float> values);
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

// Writes to a sibling temporary file and renames it into place.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace pmqa::ad

#endif  // PMQA_AD_CHECKPOINT_HPP_
