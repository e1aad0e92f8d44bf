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

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "grad_check.hpp"
#include "pmqa/ad/adam.hpp"
#include "pmqa/ad/checkpoint.hpp"
#include "pmqa/ad/nn.hpp"
#include "pmqa/ad/ops.hpp"
#include "pmqa/error.hpp"

namespace pmqa::ad {
namespace {

Tensor64 random(std::mt19937_64& rng, Shape shape) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = g(rng);
  return Tensor64(std::move(shape), std::move(v));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

class GradientCheck : public ::testing::TestWithParam<testing::GradCase> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  std::mt19937_64 rng(1234);
  for (int draw = 0; draw < 5; ++draw) {
    const auto problem = GetParam().make(rng);
    const auto r = testing::check_gradients(problem, 99 + draw);
    EXPECT_LT(r.max_rel_error, 1e-4) << GetParam().name << " " << problem.shape;
    EXPECT_GT(r.checked, 0u);
  }
}

INSTANTIATE_TEST_SUITE_P(Primitives, GradientCheck, ::testing::ValuesIn(testing::gradient_cases()),
                         [](const auto& info) { return info.param.name; });

TEST(Conv, TransposeIsAdjoint) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 3), stride = 1 + static_cast<int>(rng() % 2);
    const int pad = static_cast<int>(rng() % (k / 2 + 1));
    // Sizes where conv2d reads every input row, so no output padding is needed.
    const std::int64_t h = k - 2 * pad + stride * (1 + static_cast<std::int64_t>(rng() % 4));
    const std::int64_t w = k - 2 * pad + stride * (1 + static_cast<std::int64_t>(rng() % 4));
    const Tensor64 x = random(rng, {2, 3, h, w});
    const Tensor64 wt = random(rng, {4, 3, k, k});
    const ConvOptions opt{stride, pad};
    const Tensor64 y = conv2d(x, wt, Tensor64(), opt);
    const Tensor64 r = random(rng, y.shape());
    const Tensor64 back = conv_transpose2d(r, wt, Tensor64(), opt);
    ASSERT_EQ(back.shape(), x.shape());
    double rhs = 0.0;
    for (std::int64_t n = 0; n < 2; ++n) {
      for (std::int64_t c = 0; c < 3; ++c) {
        for (std::int64_t i = 0; i < back.dim(2); ++i) {
          for (std::int64_t j = 0; j < back.dim(3); ++j) {
            rhs += x.values()[((n * 3 + c) * h + i) * w + j] *
                   back.values()[((n * 3 + c) * back.dim(2) + i) * back.dim(3) + j];
          }
        }
      }
    }
    EXPECT_NEAR(dot(y.values(), r.values()), rhs, 1e-9 * (1.0 + std::abs(rhs)))
        << "k " << k << " stride " << stride << " pad " << pad << " h " << h << " w " << w;
  }
}

TEST(Conv, OutputSize) {
  const Tensor64 x = Tensor64::zeros({1, 2, 7, 9});
  const Tensor64 w = Tensor64::zeros({3, 2, 3, 3});
  const Tensor64 y = conv2d(x, w, Tensor64(), {2, 1});
  EXPECT_EQ(y.shape(), (Shape{1, 3, 4, 5}));
  EXPECT_THROW(conv2d(x, Tensor64::zeros({3, 1, 3, 3}), Tensor64()), ShapeError);
}

TEST(SpectralNorm, PowerIterationMatchesSvd) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::int64_t rows = 1 + static_cast<std::int64_t>(rng() % 64);
    const std::int64_t cols = 1 + static_cast<std::int64_t>(rng() % 64);
    const Tensor64 w = random(rng, {rows, cols});
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        w.values().data(), rows, cols);
    const double oracle = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
    SpectralNormState<double> st;
    const double sigma = power_iteration<double>(w.values(), rows, cols, st, 100);
    EXPECT_NEAR(sigma / oracle, 1.0, 0.01) << rows << "x" << cols;
  }
}

TEST(SpectralNorm, NormalizedWeightHasUnitNorm) {
  std::mt19937_64 rng(9);
  const Tensor64 w = random(rng, {16, 24});
  SpectralNormState<double> st;
  power_iteration<double>(w.values(), 16, 24, st, 50);
  const Tensor64 sn = spectral_normalize(w, st, true);
  Eigen::Map<const Eigen::Matrix<double, 16, 24, Eigen::RowMajor>> m(sn.values().data());
  EXPECT_NEAR(Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0), 1.0, 1e-3);
}

TEST(SpectralNorm, EvaluationDoesNotAdvanceState) {
  std::mt19937_64 rng(10);
  const Tensor64 w = random(rng, {4, 6});
  SpectralNormState<double> st;
  power_iteration<double>(w.values(), 4, 6, st, 2);
  const auto u = st.u;
  spectral_normalize(w, st, false);
  EXPECT_EQ(st.u, u);
  spectral_normalize(w, st, true);
  EXPECT_NE(st.u, u);
}

TEST(BatchNorm, EvalUsesRunningStatistics) {
  BatchNormState<double> st{{0.5}, {4.0}};
  const Tensor64 x({2, 1, 1, 1}, {2.5, 0.5});
  const Tensor64 y = batch_norm(x, st, false);
  EXPECT_NEAR(y.values()[0], 2.0 / std::sqrt(4.0 + 1e-5), 1e-12);
  EXPECT_NEAR(y.values()[1], 0.0, 1e-12);
  EXPECT_EQ(st.running_mean[0], 0.5);
}

TEST(BatchNorm, TrainingUpdatesRunningStatistics) {
  BatchNormState<double> st{{0.0}, {1.0}};
  const Tensor64 x({2, 1, 1, 2}, {1.0, 2.0, 3.0, 6.0});
  batch_norm(x, st, true);
  EXPECT_NEAR(st.running_mean[0], 0.1 * 3.0, 1e-12);
  const double unbiased = (4.0 + 1.0 + 0.0 + 9.0) / 3.0;
  EXPECT_NEAR(st.running_var[0], 0.9 + 0.1 * unbiased, 1e-12);
}

TEST(Attention, ZeroGateIsIdentity) {
  std::mt19937_64 rng(3);
  const Tensor64 x = random(rng, {2, 8, 3, 3});
  const AttentionWeights<double> w{random(rng, {1, 8, 1, 1}), random(rng, {1, 8, 1, 1}),
                                   random(rng, {4, 8, 1, 1}), random(rng, {8, 4, 1, 1})};
  const auto r = self_attention(x, w, Tensor64::scalar(0.0));
  for (std::size_t i = 0; i < x.values().size(); ++i) EXPECT_EQ(r.output.values()[i], x.values()[i]);
}

TEST(Attention, RowsAreDistributionsAndConstantQueryIsUniform) {
  std::mt19937_64 rng(4);
  const Tensor64 x = random(rng, {1, 8, 2, 2});
  AttentionWeights<double> w{random(rng, {1, 8, 1, 1}), random(rng, {1, 8, 1, 1}),
                             random(rng, {4, 8, 1, 1}), random(rng, {8, 4, 1, 1})};
  auto r = self_attention(x, w, Tensor64::scalar(1.0));
  ASSERT_EQ(r.weights.shape(), (Shape{1, 4, 4}));
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int j = 0; j < 4; ++j) s += r.weights.values()[i * 4 + j];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  // Zero query weights give identical logits, so every row is uniform.
  w.query = Tensor64::zeros({1, 8, 1, 1});
  r = self_attention(x, w, Tensor64::scalar(1.0));
  for (double v : r.weights.values()) EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(Graph, NoGradGuardSkipsRecording) {
  Tensor64 a({2}, {1.0, 2.0}, true);
  Tensor64 y;
  {
    NoGradGuard guard;
    EXPECT_FALSE(grad_enabled());
    y = sum(mul(a, a));
  }
  EXPECT_TRUE(grad_enabled());
  EXPECT_TRUE(y.node()->parents.empty());
}

TEST(Graph, SharedSubexpressionAccumulates) {
  Tensor64 a({1}, {3.0}, true);
  const Tensor64 b = mul(a, a);
  backward(sum(add(b, b)));
  EXPECT_DOUBLE_EQ(a.grad()[0], 12.0);
}

TEST(Adam, FirstStepMovesBySignTimesLr) {
  Tensor64 p({3}, {1.0, -1.0, 0.5}, true);
  p.mutable_grad()[0] = 0.2;
  p.mutable_grad()[1] = -3.0;
  p.mutable_grad()[2] = 0.0;
  std::vector<Tensor64> params{p};
  AdamState<double> st;
  adam_step<double>(params, st, 0.01);
  EXPECT_NEAR(p.values()[0], 1.0 - 0.01, 1e-6);
  EXPECT_NEAR(p.values()[1], -1.0 + 0.01, 1e-6);
  EXPECT_DOUBLE_EQ(p.values()[2], 0.5);
  EXPECT_EQ(st.t, 1);
}

TEST(Adam, MatchesReferenceOverSeveralSteps) {
  Tensor64 p({1}, {0.0}, true);
  std::vector<Tensor64> params{p};
  AdamState<double> st;
  st.beta1 = 0.5;
  double m = 0, v = 0, x = 0;
  const double grads[] = {1.0, -0.5, 2.0, 0.25};
  for (int t = 1; t <= 4; ++t) {
    p.mutable_grad()[0] = grads[t - 1];
    adam_step<double>(params, st, 0.1);
    m = 0.5 * m + 0.5 * grads[t - 1];
    v = 0.999 * v + 0.001 * grads[t - 1] * grads[t - 1];
    const double mh = m / (1 - std::pow(0.5, t)), vh = v / (1 - std::pow(0.999, t));
    x -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p.values()[0], x, 1e-9);
  }
}

TEST(Adam, NonFiniteGradientHaltsWithoutUpdating) {
  Tensor64 a({1}, {1.0}, true), b({1}, {2.0}, true);
  a.mutable_grad()[0] = 1.0;
  b.mutable_grad()[0] = std::numeric_limits<double>::quiet_NaN();
  std::vector<Tensor64> params{a, b};
  AdamState<double> st;
  EXPECT_THROW(adam_step<double>(params, st, 0.1), TrainingHalted);
  EXPECT_EQ(a.values()[0], 1.0);
  EXPECT_EQ(st.t, 0);
}

TEST(Init, OrthogonalRows) {
  Rng rng(1);
  const auto v = orthogonal_values<double>(6, 10, rng);
  Eigen::Map<const Eigen::Matrix<double, 6, 10, Eigen::RowMajor>> m(v.data());
  EXPECT_TRUE((m * m.transpose()).isIdentity(1e-10));
}

TEST(ParameterSet, RejectsDuplicates) {
  ParameterSet<double> ps;
  ps.add_parameter("w", Tensor64::zeros({2}));
  EXPECT_THROW(ps.add_parameter("w", Tensor64::zeros({2})), InvalidArgument);
  EXPECT_EQ(ps.parameter_count(), 2);
  EXPECT_TRUE(ps.find("w").requires_grad());
}

TEST(Checkpoint, RoundTripsExactly) {
  Checkpoint ck;
  ck.set_meta("digest", "abc");
  ck.set_meta("note", "two words");
  ck.add("a.weight", {2, 3}, {1, 2, 3, 4, 5, 6});
  ck.add("b", {1}, {-0.25f});
  const std::string bytes = encode_checkpoint(ck);
  const Checkpoint back = decode_checkpoint(bytes);
  EXPECT_EQ(back.meta_value("note"), "two words");
  ASSERT_EQ(back.tensors.size(), 2u);
  EXPECT_EQ(back.tensors[0].shape, (Shape{2, 3}));
  EXPECT_EQ(back.tensors[0].values, ck.tensors[0].values);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_THROW(back.meta_value("missing"), FormatError);
}

TEST(Checkpoint, DetectsTruncation) {
  Checkpoint ck;
  ck.add("w", {4}, {1, 2, 3, 4});
  std::string bytes = encode_checkpoint(ck);
  bytes.resize(bytes.size() - 2);
  EXPECT_THROW(decode_checkpoint(bytes), FormatError);
  EXPECT_THROW(decode_checkpoint("garbage"), FormatError);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "pmqa_test.ckpt";
  Checkpoint ck;
  ck.add("w", {2}, {1.5f, 2.5f});
  write_checkpoint(path, ck);
  EXPECT_EQ(read_checkpoint(path).tensors[0].values, ck.tensors[0].values);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace pmqa::ad
