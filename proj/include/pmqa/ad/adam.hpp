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

#ifndef PMQA_AD_ADAM_HPP_
#define PMQA_AD_ADAM_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "pmqa/ad/tensor.hpp"

namespace pmqa::ad {

template <typename T>
struct AdamState {
  T beta1 = T(0);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  std::int64_t t = 0;
  // One accumulator per parameter, allocated on the first step.
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

// One bias-corrected Adam update of every parameter from its accumulated
// gradient (a parameter without a gradient counts as zero gradient). Throws
// TrainingHalted before touching anything if a gradient is not finite.
template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state, T lr);

}  // namespace pmqa::ad

#endif  // PMQA_AD_ADAM_HPP_
