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

#ifndef PMQA_AD_NN_HPP_
#define PMQA_AD_NN_HPP_

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmqa/ad/ops.hpp"
#include "pmqa/ad/tensor.hpp"

namespace pmqa::ad {

enum class Mode { kTrain, kEval };

using Rng = std::mt19937_64;

// Named registry of trainable tensors and non-trainable state vectors
// (power-iteration vectors, running statistics). Buffers are referenced by
// pointer, so the owning layers must not move after registration.
template <typename T>
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;

  Tensor<T> add_parameter(const std::string& name, Tensor<T> tensor);
  void add_buffer(const std::string& name, std::vector<T>* buffer);

  const std::vector<std::pair<std::string, Tensor<T>>>& parameters() const { return params_; }
  const std::map<std::string, std::vector<T>*>& buffers() const { return buffers_; }
  std::vector<Tensor<T>> tensors() const;
  Tensor<T> find(const std::string& name) const;
  std::int64_t parameter_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor<T>>> params_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::vector<T>*> buffers_;
};

// Orthogonal matrix of shape [rows, cols] (rows of Q or its transpose,
// whichever is larger), flattened row-major.
template <typename T>
std::vector<T> orthogonal_values(std::int64_t rows, std::int64_t cols, Rng& rng);
template <typename T>
std::vector<T> normal_values(std::int64_t count, T stddev, Rng& rng);

template <typename T>
class SNLinear {
 public:
  SNLinear(ParameterSet<T>& params, const std::string& name, std::int64_t in, std::int64_t out,
           bool bias, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  // The weight forward() uses; training mode refreshes the power iteration.
  Tensor<T> normalized_weight(Mode mode);

 private:
  Tensor<T> weight_;
  Tensor<T> bias_;
  SpectralNormState<T> sn_;
};

template <typename T>
class SNConv2d {
 public:
  SNConv2d(ParameterSet<T>& params, const std::string& name, std::int64_t in, std::int64_t out,
           int kernel, bool bias, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  Tensor<T> normalized_weight(Mode mode);

 private:
  Tensor<T> weight_;
  Tensor<T> bias_;
  SpectralNormState<T> sn_;
  int padding_;
};

template <typename T>
class SNEmbedding {
 public:
  SNEmbedding(ParameterSet<T>& params, const std::string& name, std::int64_t classes,
              std::int64_t dim, Rng& rng);
  Tensor<T> forward(std::span<const int> ids, Mode mode);
  Tensor<T> normalized_table(Mode mode);
  Tensor<T>& raw_table() { return table_; }

 private:
  Tensor<T> table_;
  SpectralNormState<T> sn_;
};

// Batch normalization whose per-channel gain and bias come from class
// embeddings: gain = 1 + G[y], bias = B[y]. With one class it is ordinary
// batch normalization with a learned affine.
template <typename T>
class ConditionalBatchNorm {
 public:
  ConditionalBatchNorm(ParameterSet<T>& params, const std::string& name, std::int64_t channels,
                       std::int64_t classes, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, std::span<const int> ids, Mode mode);

 private:
  Tensor<T> gain_;
  Tensor<T> bias_;
  BatchNormState<T> stats_;
};

// Projection weights for self-attention over a [N, C, H, W] map: query and
// key [C/8, C, 1, 1], value [C/2, C, 1, 1], output [C, C/2, 1, 1].
template <typename T>
struct AttentionWeights {
  Tensor<T> query, key, value, output;
};

template <typename T>
struct AttentionResult {
  Tensor<T> output;   // x + gate * attention(x)
  Tensor<T> weights;  // [N, HW, HW]; row i is the softmax over positions for query i
};

template <typename T>
AttentionResult<T> self_attention(const Tensor<T>& x, const AttentionWeights<T>& w,
                                  const Tensor<T>& gate);

template <typename T>
class SelfAttention {
 public:
  SelfAttention(ParameterSet<T>& params, const std::string& name, std::int64_t channels, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  Tensor<T>& gate() { return gate_; }

 private:
  SNConv2d<T> query_, key_, value_, output_;
  Tensor<T> gate_;
};

}  // namespace pmqa::ad

#endif  // PMQA_AD_NN_HPP_
