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

#ifndef PMQA_GAN_MODEL_HPP_
#define PMQA_GAN_MODEL_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pmqa/ad/nn.hpp"
#include "pmqa/ad/tensor.hpp"
#include "pmqa/gan/config.hpp"

namespace pmqa::gan {

using ad::Mode;
using ad::Tensor;

// z [n, z_dim] with i.i.d. N(0, 1) entries, a pure function of the seed.
template <typename T>
Tensor<T> sample_noise(std::int64_t n, std::int64_t z_dim, std::uint64_t seed);
template <typename T>
Tensor<T> sample_noise(std::int64_t n, std::int64_t z_dim, ad::Rng& rng);

template <typename T>
class Generator {
 public:
  virtual ~Generator() = default;
  // z [N, z_dim], one genre id per row -> [N, 1, bands, frames] in [-1, 1].
  virtual Tensor<T> forward(const Tensor<T>& z, std::span<const int> genres, Mode mode) = 0;
  virtual ad::ParameterSet<T>& parameters() = 0;
};

template <typename T>
class Discriminator {
 public:
  virtual ~Discriminator() = default;
  // x [N, 1, bands, frames] -> one unbounded score per row, shape [N].
  virtual Tensor<T> forward(const Tensor<T>& x, std::span<const int> genres, Mode mode) = 0;
  virtual ad::ParameterSet<T>& parameters() = 0;
};

// Residual generator: a dense projection of z to a 4x4 map, up blocks with
// class-conditional batch normalization, self-attention at the configured
// resolution, and a batch-norm/ReLU/conv/tanh output stage.
template <typename T>
class ResNetGenerator final : public Generator<T> {
 public:
  ResNetGenerator(const GanConfig& config, ad::Rng& rng);
  ~ResNetGenerator() override;
  ResNetGenerator(const ResNetGenerator&) = delete;
  ResNetGenerator& operator=(const ResNetGenerator&) = delete;

  Tensor<T> forward(const Tensor<T>& z, std::span<const int> genres, Mode mode) override;
  ad::ParameterSet<T>& parameters() override { return params_; }

 private:
  struct Layers;
  GanConfig config_;
  ad::ParameterSet<T> params_;
  std::unique_ptr<Layers> layers_;
};

// Residual projection discriminator:
//   D(x, y) = psi(phi(x)) + <e_y, phi(x)>
// where phi sums the last feature map over space, psi is a dense head and e_y
// a spectrally normalized class embedding.
template <typename T>
class ProjectionDiscriminator final : public Discriminator<T> {
 public:
  ProjectionDiscriminator(const GanConfig& config, ad::Rng& rng);
  ~ProjectionDiscriminator() override;
  ProjectionDiscriminator(const ProjectionDiscriminator&) = delete;
  ProjectionDiscriminator& operator=(const ProjectionDiscriminator&) = delete;

  Tensor<T> forward(const Tensor<T>& x, std::span<const int> genres, Mode mode) override;
  ad::ParameterSet<T>& parameters() override { return params_; }

  // phi(x), [N, C].
  Tensor<T> features(const Tensor<T>& x, Mode mode);
  // psi(phi), [N].
  Tensor<T> unconditional(const Tensor<T>& phi, Mode mode);
  // The normalized embedding table the projection term uses, [genres, C].
  // Evaluation mode does not advance the power iteration.
  Tensor<T> genre_embedding(Mode mode);
  // The raw (pre-normalization) table, for tests that zero it.
  Tensor<T>& raw_genre_embedding();

 private:
  struct Layers;
  GanConfig config_;
  ad::ParameterSet<T> params_;
  std::unique_ptr<Layers> layers_;
};

}  // namespace pmqa::gan

#endif  // PMQA_GAN_MODEL_HPP_
