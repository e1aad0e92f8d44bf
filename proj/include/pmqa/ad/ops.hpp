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

#ifndef PMQA_AD_OPS_HPP_
#define PMQA_AD_OPS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "pmqa/ad/tensor.hpp"

namespace pmqa::ad {

// Elementwise ops on equal shapes.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T offset);
// a * s for a one-element tensor s (learned gates).
template <typename T> Tensor<T> scale_by(const Tensor<T>& a, const Tensor<T>& s);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> tanh(const Tensor<T>& a);

template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
// Rows [begin, begin + length) along the first dimension.
template <typename T> Tensor<T> narrow(const Tensor<T>& a, std::int64_t begin, std::int64_t length);

// [m, k] x [k, n].
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// x [N, in], weight [out, in], bias [out] or undefined.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

struct ConvOptions {
  int stride = 1;
  int padding = 0;
};

// Cross-correlation. x [N, C, H, W], weight [O, C, kh, kw], bias [O] or
// undefined. Output spatial size floor((in + 2 pad - k) / stride) + 1.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 ConvOptions options = {});

// Adjoint of conv2d with the same weight tensor: x [N, O, H, W] maps to
// [N, C, (H - 1) stride - 2 pad + kh, ...]. bias [C] or undefined.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           ConvOptions options = {});

template <typename T> Tensor<T> avg_pool2d(const Tensor<T>& x, int factor = 2);
template <typename T> Tensor<T> upsample_nearest2d(const Tensor<T>& x, int factor = 2);

template <typename T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);
};

// Per-channel normalization of x [N, C, H, W] without affine terms. Training
// uses batch statistics and updates the running averages; evaluation uses
// the running averages.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, BatchNormState<T>& state, bool training);

// y[n, c, :, :] = x[n, c, :, :] * gain[n, c] + bias[n, c].
template <typename T>
Tensor<T> channel_affine(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias);

// Rows of table [K, C] selected by ids -> [N, C].
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const int> ids);

// Sum over H and W: [N, C, H, W] -> [N, C].
template <typename T> Tensor<T> spatial_sum(const Tensor<T>& x);
// Row-wise inner product: [N, C] x [N, C] -> [N].
template <typename T> Tensor<T> row_dot(const Tensor<T>& a, const Tensor<T>& b);

// Batched matmul [B, m, k] x [B, k, n] -> [B, m, n].
template <typename T> Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b);
// [B, m, n] -> [B, n, m].
template <typename T> Tensor<T> transpose_last2(const Tensor<T>& a);
// Softmax over the last dimension.
template <typename T> Tensor<T> softmax_last(const Tensor<T>& a);

// mean(max(0, 1 - d_real)) + mean(max(0, 1 + d_fake)).
template <typename T>
Tensor<T> hinge_d_loss(const Tensor<T>& d_real, const Tensor<T>& d_fake);
// -mean(d_fake).
template <typename T> Tensor<T> hinge_g_loss(const Tensor<T>& d_fake);

// Persistent left/right singular vector estimates for a weight viewed as
// [shape[0], numel / shape[0]].
template <typename T>
struct SpectralNormState {
  std::vector<T> u;
  std::vector<T> v;
};

// Runs `iterations` power-iteration steps in place and returns u^T W v.
template <typename T>
T power_iteration(std::span<const T> weight, std::int64_t rows, std::int64_t cols,
                  SpectralNormState<T>& state, int iterations);

// weight / sigma with sigma = u^T W v, clamped to >= 1e-12. When `update` is
// set one power-iteration step refreshes u and v first. The gradient treats
// u and v as constants.
template <typename T>
Tensor<T> spectral_normalize(const Tensor<T>& weight, SpectralNormState<T>& state, bool update);

}  // namespace pmqa::ad

#endif  // PMQA_AD_OPS_HPP_
