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

#include "pmqa/ad/nn.hpp"

#include <Eigen/Dense>

#include <algorithm>

#include "pmqa/error.hpp"

namespace pmqa::ad {

namespace {

// Runs the power iteration to convergence once so that an untrained layer
// already evaluates with a sensible sigma.
template <typename T>
void warm_up(const Tensor<T>& weight, SpectralNormState<T>& state) {
  const std::int64_t rows = weight.dim(0);
  power_iteration(weight.values(), rows, weight.numel() / rows, state, 20);
}

}  // namespace

template <typename T>
Tensor<T> ParameterSet<T>::add_parameter(const std::string& name, Tensor<T> tensor) {
  if (index_.count(name) || buffers_.count(name)) {
    throw InvalidArgument("duplicate parameter name '" + name + "'");
  }
  tensor.set_requires_grad(true);
  index_[name] = params_.size();
  params_.emplace_back(name, tensor);
  return tensor;
}

template <typename T>
void ParameterSet<T>::add_buffer(const std::string& name, std::vector<T>* buffer) {
  if (index_.count(name) || buffers_.count(name)) {
    throw InvalidArgument("duplicate buffer name '" + name + "'");
  }
  buffers_[name] = buffer;
}

template <typename T>
std::vector<Tensor<T>> ParameterSet<T>::tensors() const {
  std::vector<Tensor<T>> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

template <typename T>
Tensor<T> ParameterSet<T>::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("no parameter named '" + name + "'");
  return params_[it->second].second;
}

template <typename T>
std::int64_t ParameterSet<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

template <typename T>
std::vector<T> orthogonal_values(std::int64_t rows, std::int64_t cols, Rng& rng) {
  if (rows <= 0 || cols <= 0) throw InvalidArgument("orthogonal init needs a non-empty shape");
  const bool tall = rows >= cols;
  const std::int64_t m = tall ? rows : cols, n = tall ? cols : rows;
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(m, n);
  for (std::int64_t j = 0; j < n; ++j) {
    for (std::int64_t i = 0; i < m; ++i) a(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, n);
  // Fix column signs so the factorization is unique.
  const Eigen::MatrixXd r = qr.matrixQR();
  for (std::int64_t j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  std::vector<T> out(static_cast<std::size_t>(rows * cols));
  for (std::int64_t i = 0; i < rows; ++i) {
    for (std::int64_t j = 0; j < cols; ++j) {
      out[static_cast<std::size_t>(i * cols + j)] = static_cast<T>(tall ? q(i, j) : q(j, i));
    }
  }
  return out;
}

template <typename T>
std::vector<T> normal_values(std::int64_t count, T stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, static_cast<double>(stddev));
  std::vector<T> out(static_cast<std::size_t>(count));
  for (auto& v : out) v = static_cast<T>(normal(rng));
  return out;
}

template <typename T>
SNLinear<T>::SNLinear(ParameterSet<T>& params, const std::string& name, std::int64_t in,
                      std::int64_t out, bool bias, Rng& rng) {
  weight_ = params.add_parameter(name + ".weight",
                                 Tensor<T>({out, in}, orthogonal_values<T>(out, in, rng)));
  if (bias) bias_ = params.add_parameter(name + ".bias", Tensor<T>::zeros({out}));
  warm_up(weight_, sn_);
  params.add_buffer(name + ".sn_u", &sn_.u);
  params.add_buffer(name + ".sn_v", &sn_.v);
}

template <typename T>
Tensor<T> SNLinear<T>::forward(const Tensor<T>& x, Mode mode) {
  return linear(x, normalized_weight(mode), bias_);
}

template <typename T>
Tensor<T> SNLinear<T>::normalized_weight(Mode mode) {
  return spectral_normalize(weight_, sn_, mode == Mode::kTrain);
}

template <typename T>
SNConv2d<T>::SNConv2d(ParameterSet<T>& params, const std::string& name, std::int64_t in,
                      std::int64_t out, int kernel, bool bias, Rng& rng)
    : padding_(kernel / 2) {
  const std::int64_t fan = in * kernel * kernel;
  weight_ = params.add_parameter(
      name + ".weight", Tensor<T>({out, in, kernel, kernel}, orthogonal_values<T>(out, fan, rng)));
  if (bias) bias_ = params.add_parameter(name + ".bias", Tensor<T>::zeros({out}));
  warm_up(weight_, sn_);
  params.add_buffer(name + ".sn_u", &sn_.u);
  params.add_buffer(name + ".sn_v", &sn_.v);
}

template <typename T>
Tensor<T> SNConv2d<T>::forward(const Tensor<T>& x, Mode mode) {
  return conv2d(x, normalized_weight(mode), bias_,
                ConvOptions{1, padding_});
}

template <typename T>
Tensor<T> SNConv2d<T>::normalized_weight(Mode mode) {
  return spectral_normalize(weight_, sn_, mode == Mode::kTrain);
}

template <typename T>
SNEmbedding<T>::SNEmbedding(ParameterSet<T>& params, const std::string& name,
                            std::int64_t classes, std::int64_t dim, Rng& rng) {
  table_ = params.add_parameter(name + ".table",
                                Tensor<T>({classes, dim}, normal_values<T>(classes * dim, T(0.02), rng)));
  warm_up(table_, sn_);
  params.add_buffer(name + ".sn_u", &sn_.u);
  params.add_buffer(name + ".sn_v", &sn_.v);
}

template <typename T>
Tensor<T> SNEmbedding<T>::forward(std::span<const int> ids, Mode mode) {
  return embedding(normalized_table(mode), ids);
}

template <typename T>
Tensor<T> SNEmbedding<T>::normalized_table(Mode mode) {
  return spectral_normalize(table_, sn_, mode == Mode::kTrain);
}

template <typename T>
ConditionalBatchNorm<T>::ConditionalBatchNorm(ParameterSet<T>& params, const std::string& name,
                                              std::int64_t channels, std::int64_t classes,
                                              Rng& rng) {
  gain_ = params.add_parameter(
      name + ".gain", Tensor<T>({classes, channels}, normal_values<T>(classes * channels, T(0.02), rng)));
  bias_ = params.add_parameter(
      name + ".bias", Tensor<T>({classes, channels}, normal_values<T>(classes * channels, T(0.02), rng)));
  stats_.running_mean.assign(static_cast<std::size_t>(channels), T(0));
  stats_.running_var.assign(static_cast<std::size_t>(channels), T(1));
  params.add_buffer(name + ".running_mean", &stats_.running_mean);
  params.add_buffer(name + ".running_var", &stats_.running_var);
}

template <typename T>
Tensor<T> ConditionalBatchNorm<T>::forward(const Tensor<T>& x, std::span<const int> ids,
                                           Mode mode) {
  const Tensor<T> normalized = batch_norm(x, stats_, mode == Mode::kTrain);
  return channel_affine(normalized, add_scalar(embedding(gain_, ids), T(1)),
                        embedding(bias_, ids));
}

template <typename T>
AttentionResult<T> self_attention(const Tensor<T>& x, const AttentionWeights<T>& w,
                                  const Tensor<T>& gate) {
  if (!x.defined() || x.rank() != 4) throw ShapeError("self_attention expects [N, C, H, W]");
  const std::int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  const Tensor<T> none;
  const auto project = [&](const Tensor<T>& weight) {
    const Tensor<T> y = conv2d(x, weight, none);
    return reshape(y, {n, y.dim(1), hw});
  };
  const Tensor<T> q = project(w.query);  // [N, Cq, HW]
  const Tensor<T> k = project(w.key);
  const Tensor<T> v = project(w.value);  // [N, Cv, HW]
  const Tensor<T> weights = softmax_last(bmm(transpose_last2(q), k));  // [N, HW, HW]
  const Tensor<T> attended = bmm(v, transpose_last2(weights));         // [N, Cv, HW]
  const Tensor<T> out = conv2d(reshape(attended, {n, v.dim(1), x.dim(2), x.dim(3)}), w.output, none);
  if (out.dim(1) != c) throw ShapeError("self_attention: output projection must restore channels");
  return {add(x, scale_by(out, gate)), weights};
}

template <typename T>
SelfAttention<T>::SelfAttention(ParameterSet<T>& params, const std::string& name,
                                std::int64_t channels, Rng& rng)
    : query_(params, name + ".query", channels, std::max<std::int64_t>(1, channels / 8), 1, false, rng),
      key_(params, name + ".key", channels, std::max<std::int64_t>(1, channels / 8), 1, false, rng),
      value_(params, name + ".value", channels, std::max<std::int64_t>(1, channels / 2), 1, false, rng),
      output_(params, name + ".output", std::max<std::int64_t>(1, channels / 2), channels, 1, false, rng) {
  gate_ = params.add_parameter(name + ".gate", Tensor<T>::scalar(T(0)));
}

template <typename T>
Tensor<T> SelfAttention<T>::forward(const Tensor<T>& x, Mode mode) {
  AttentionWeights<T> w;
  w.query = query_.normalized_weight(mode);
  w.key = key_.normalized_weight(mode);
  w.value = value_.normalized_weight(mode);
  w.output = output_.normalized_weight(mode);
  return self_attention(x, w, gate_).output;
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template std::vector<float> orthogonal_values(std::int64_t, std::int64_t, Rng&);
template std::vector<double> orthogonal_values(std::int64_t, std::int64_t, Rng&);
template std::vector<float> normal_values(std::int64_t, float, Rng&);
template std::vector<double> normal_values(std::int64_t, double, Rng&);
template class SNLinear<float>;
template class SNLinear<double>;
template class SNConv2d<float>;
template class SNConv2d<double>;
template class SNEmbedding<float>;
template class SNEmbedding<double>;
template class ConditionalBatchNorm<float>;
template class ConditionalBatchNorm<double>;
template AttentionResult<float> self_attention(const Tensor<float>&, const AttentionWeights<float>&,
                                               const Tensor<float>&);
template AttentionResult<double> self_attention(const Tensor<double>&,
                                                const AttentionWeights<double>&,
                                                const Tensor<double>&);
template class SelfAttention<float>;
template class SelfAttention<double>;

}  // namespace pmqa::ad
