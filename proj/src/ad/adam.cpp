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

#include "pmqa/ad/adam.hpp"

#include <cmath>
#include <string>

#include "pmqa/error.hpp"

namespace pmqa::ad {

template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state, T lr) {
  if (state.m.empty() && state.t == 0) {
    for (const auto& p : params) {
      state.m.emplace_back(static_cast<std::size_t>(p.numel()), T(0));
      state.v.emplace_back(static_cast<std::size_t>(p.numel()), T(0));
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam: state holds " + std::to_string(state.m.size()) +
                     " accumulators for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto n = static_cast<std::size_t>(params[i].numel());
    if (state.m[i].size() != n || state.v[i].size() != n) {
      throw ShapeError("adam: accumulator shape mismatch for parameter " + std::to_string(i));
    }
    for (T g : params[i].grad()) {
      if (!std::isfinite(g)) throw TrainingHalted("non-finite gradient in parameter " + std::to_string(i));
    }
  }

  state.t += 1;
  const double c1 = 1.0 - std::pow(static_cast<double>(state.beta1), static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(static_cast<double>(state.beta2), static_cast<double>(state.t));
  const T step = static_cast<T>(lr / c1);
  const T root_c2 = static_cast<T>(std::sqrt(c2));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto grad = params[i].grad();
    auto values = params[i].mutable_values();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < values.size(); ++k) {
      const T g = grad.empty() ? T(0) : grad[k];
      m[k] = state.beta1 * m[k] + (T(1) - state.beta1) * g;
      v[k] = state.beta2 * v[k] + (T(1) - state.beta2) * g * g;
      values[k] -= step * m[k] / (std::sqrt(v[k]) / root_c2 + state.eps);
    }
  }
}

template void adam_step(std::span<Tensor<float>>, AdamState<float>&, float);
template void adam_step(std::span<Tensor<double>>, AdamState<double>&, double);

}  // namespace pmqa::ad
