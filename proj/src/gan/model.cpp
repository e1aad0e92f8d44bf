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

#include "pmqa/gan/model.hpp"

#include <optional>
#include <string>

#include "pmqa/ad/ops.hpp"
#include "pmqa/error.hpp"

namespace pmqa::gan {

using ad::ConditionalBatchNorm;
using ad::SelfAttention;
using ad::SNConv2d;
using ad::SNEmbedding;
using ad::SNLinear;

template <typename T>
Tensor<T> sample_noise(std::int64_t n, std::int64_t z_dim, ad::Rng& rng) {
  if (n < 1 || z_dim < 1) throw InvalidArgument("sample_noise: n and z_dim must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<T> values(static_cast<std::size_t>(n * z_dim));
  for (auto& v : values) v = static_cast<T>(normal(rng));
  return Tensor<T>({n, z_dim}, std::move(values));
}

template <typename T>
Tensor<T> sample_noise(std::int64_t n, std::int64_t z_dim, std::uint64_t seed) {
  ad::Rng rng(seed);
  return sample_noise<T>(n, z_dim, rng);
}

namespace {

template <typename T>
struct GBlock {
  ConditionalBatchNorm<T> bn1, bn2;
  SNConv2d<T> conv1, conv2, shortcut;

  GBlock(ad::ParameterSet<T>& p, const std::string& name, std::int64_t in, std::int64_t out,
         std::int64_t classes, ad::Rng& rng)
      : bn1(p, name + ".bn1", in, classes, rng),
        bn2(p, name + ".bn2", out, classes, rng),
        conv1(p, name + ".conv1", in, out, 3, true, rng),
        conv2(p, name + ".conv2", out, out, 3, true, rng),
        shortcut(p, name + ".shortcut", in, out, 1, true, rng) {}

  Tensor<T> forward(const Tensor<T>& x, std::span<const int> y, Mode mode) {
    Tensor<T> h = ad::relu(bn1.forward(x, y, mode));
    h = conv1.forward(ad::upsample_nearest2d(h, 2), mode);
    h = conv2.forward(ad::relu(bn2.forward(h, y, mode)), mode);
    return ad::add(h, shortcut.forward(ad::upsample_nearest2d(x, 2), mode));
  }
};

template <typename T>
struct DBlock {
  SNConv2d<T> conv1, conv2;
  std::optional<SNConv2d<T>> shortcut;
  bool preactivation;
  bool downsample;

  DBlock(ad::ParameterSet<T>& p, const std::string& name, std::int64_t in, std::int64_t out,
         bool preact, bool down, ad::Rng& rng)
      : conv1(p, name + ".conv1", in, out, 3, true, rng),
        conv2(p, name + ".conv2", out, out, 3, true, rng),
        preactivation(preact),
        downsample(down) {
    if (in != out || down) shortcut.emplace(p, name + ".shortcut", in, out, 1, true, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> h = preactivation ? ad::relu(x) : x;
    h = conv2.forward(ad::relu(conv1.forward(h, mode)), mode);
    if (downsample) h = ad::avg_pool2d(h, 2);
    Tensor<T> s = x;
    if (shortcut) {
      // The first block pools before its shortcut projection, later ones after.
      if (preactivation) {
        s = shortcut->forward(x, mode);
        if (downsample) s = ad::avg_pool2d(s, 2);
      } else {
        if (downsample) s = ad::avg_pool2d(s, 2);
        s = shortcut->forward(s, mode);
      }
    }
    return ad::add(h, s);
  }
};

void check_genres(std::span<const int> genres, std::int64_t batch, int n_genres) {
  if (static_cast<std::int64_t>(genres.size()) != batch) {
    throw ShapeError("got " + std::to_string(genres.size()) + " genre ids for a batch of " +
                     std::to_string(batch));
  }
  for (int g : genres) {
    if (g < 0 || g >= n_genres) {
      throw InvalidArgument("genre id " + std::to_string(g) + " outside [0, " +
                            std::to_string(n_genres) + ")");
    }
  }
}

}  // namespace

template <typename T>
struct ResNetGenerator<T>::Layers {
  std::int64_t base_channels;
  SNLinear<T> input;
  std::vector<std::unique_ptr<GBlock<T>>> blocks;
  std::unique_ptr<SelfAttention<T>> attention;
  std::size_t attention_after = 0;
  ConditionalBatchNorm<T> out_bn;
  SNConv2d<T> out_conv;

  Layers(ad::ParameterSet<T>& p, const GanConfig& c, const std::vector<int>& plan, ad::Rng& rng)
      : base_channels(std::int64_t{plan.front()} * c.channel_multiplier),
        input(p, "g.input", c.z_dim, base_channels * 16, true, rng),
        out_bn(p, "g.out_bn", std::int64_t{plan.back()} * c.channel_multiplier, 1, rng),
        out_conv(p, "g.out_conv", std::int64_t{plan.back()} * c.channel_multiplier, 1, 3, true, rng) {
    int resolution = 4;
    for (std::size_t i = 0; i + 1 < plan.size(); ++i) {
      const std::int64_t in = std::int64_t{plan[i]} * c.channel_multiplier;
      const std::int64_t out = std::int64_t{plan[i + 1]} * c.channel_multiplier;
      blocks.push_back(std::make_unique<GBlock<T>>(p, "g.block" + std::to_string(i), in, out,
                                                   c.n_genres, rng));
      resolution *= 2;
      if (!attention && resolution == c.attention_resolution) {
        attention = std::make_unique<SelfAttention<T>>(p, "g.attention", out, rng);
        attention_after = i;
      }
    }
  }
};

template <typename T>
ResNetGenerator<T>::ResNetGenerator(const GanConfig& config, ad::Rng& rng) : config_(config) {
  config_.validate();
  layers_ = std::make_unique<Layers>(params_, config_, generator_channel_plan(config_.bands), rng);
}

template <typename T>
ResNetGenerator<T>::~ResNetGenerator() = default;

template <typename T>
Tensor<T> ResNetGenerator<T>::forward(const Tensor<T>& z, std::span<const int> genres, Mode mode) {
  if (!z.defined() || z.rank() != 2 || z.dim(1) != config_.z_dim) {
    throw ShapeError("generator expects z of shape [N, " + std::to_string(config_.z_dim) + "]");
  }
  const std::int64_t n = z.dim(0);
  check_genres(genres, n, config_.n_genres);
  auto& L = *layers_;
  Tensor<T> h = ad::reshape(L.input.forward(z, mode), {n, L.base_channels, 4, 4});
  for (std::size_t i = 0; i < L.blocks.size(); ++i) {
    h = L.blocks[i]->forward(h, genres, mode);
    if (L.attention && i == L.attention_after) h = L.attention->forward(h, mode);
  }
  const std::vector<int> single(static_cast<std::size_t>(n), 0);
  h = ad::relu(L.out_bn.forward(h, single, mode));
  return ad::tanh(L.out_conv.forward(h, mode));
}

template <typename T>
struct ProjectionDiscriminator<T>::Layers {
  std::vector<std::unique_ptr<DBlock<T>>> blocks;
  std::unique_ptr<SelfAttention<T>> attention;
  std::size_t attention_after = 0;
  SNLinear<T> head;
  SNEmbedding<T> embed;

  Layers(ad::ParameterSet<T>& p, const GanConfig& c, const std::vector<int>& plan, ad::Rng& rng)
      : head(p, "d.head", std::int64_t{plan.back()} * c.channel_multiplier, 1, true, rng),
        embed(p, "d.embed", c.n_genres, std::int64_t{plan.back()} * c.channel_multiplier, rng) {
    int resolution = c.bands;
    std::int64_t in = 1;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const std::int64_t out = std::int64_t{plan[i]} * c.channel_multiplier;
      const bool down = i + 1 < plan.size();
      blocks.push_back(std::make_unique<DBlock<T>>(p, "d.block" + std::to_string(i), in, out,
                                                   i > 0, down, rng));
      if (down) resolution /= 2;
      if (!attention && resolution == c.attention_resolution) {
        attention = std::make_unique<SelfAttention<T>>(p, "d.attention", out, rng);
        attention_after = i;
      }
      in = out;
    }
  }
};

template <typename T>
ProjectionDiscriminator<T>::ProjectionDiscriminator(const GanConfig& config, ad::Rng& rng)
    : config_(config) {
  config_.validate();
  layers_ = std::make_unique<Layers>(params_, config_, discriminator_channel_plan(config_.bands), rng);
}

template <typename T>
ProjectionDiscriminator<T>::~ProjectionDiscriminator() = default;

template <typename T>
Tensor<T> ProjectionDiscriminator<T>::features(const Tensor<T>& x, Mode mode) {
  if (!x.defined() || x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != config_.bands ||
      x.dim(3) != config_.frames) {
    throw ShapeError("discriminator expects [N, 1, " + std::to_string(config_.bands) + ", " +
                     std::to_string(config_.frames) + "], got " +
                     (x.defined() ? ad::shape_string(x.shape()) : std::string("undefined")));
  }
  auto& L = *layers_;
  Tensor<T> h = x;
  for (std::size_t i = 0; i < L.blocks.size(); ++i) {
    h = L.blocks[i]->forward(h, mode);
    if (L.attention && i == L.attention_after) h = L.attention->forward(h, mode);
  }
  return ad::spatial_sum(ad::relu(h));
}

template <typename T>
Tensor<T> ProjectionDiscriminator<T>::unconditional(const Tensor<T>& phi, Mode mode) {
  const Tensor<T> out = layers_->head.forward(phi, mode);
  return ad::reshape(out, {out.dim(0)});
}

template <typename T>
Tensor<T> ProjectionDiscriminator<T>::genre_embedding(Mode mode) {
  return layers_->embed.normalized_table(mode);
}

template <typename T>
Tensor<T>& ProjectionDiscriminator<T>::raw_genre_embedding() {
  return layers_->embed.raw_table();
}

template <typename T>
Tensor<T> ProjectionDiscriminator<T>::forward(const Tensor<T>& x, std::span<const int> genres,
                                              Mode mode) {
  if (x.defined() && x.rank() >= 1) check_genres(genres, x.dim(0), config_.n_genres);
  const Tensor<T> phi = features(x, mode);
  return ad::add(unconditional(phi, mode), ad::row_dot(layers_->embed.forward(genres, mode), phi));
}

template Tensor<float> sample_noise(std::int64_t, std::int64_t, std::uint64_t);
template Tensor<double> sample_noise(std::int64_t, std::int64_t, std::uint64_t);
template Tensor<float> sample_noise(std::int64_t, std::int64_t, ad::Rng&);
template Tensor<double> sample_noise(std::int64_t, std::int64_t, ad::Rng&);
template class ResNetGenerator<float>;
template class ResNetGenerator<double>;
template class ProjectionDiscriminator<float>;
template class ProjectionDiscriminator<double>;

}  // namespace pmqa::gan
