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

#ifndef PMQA_TESTS_SUPPORT_GRAD_CHECK_HPP_
#define PMQA_TESTS_SUPPORT_GRAD_CHECK_HPP_

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pmqa/ad/tensor.hpp"

namespace pmqa::testing {

using ad::Tensor64;
using GradFn = std::function<Tensor64(const std::vector<Tensor64>&)>;

struct GradProblem {
  GradFn fn;
  std::vector<Tensor64> inputs;
  std::string shape;  // human-readable description of the drawn shapes
};

struct GradCase {
  std::string name;
  std::function<GradProblem(std::mt19937_64&)> make;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Compares backward() against central differences on <fn(inputs), R> for a
// fixed random R. Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckResult check_gradients(const GradProblem& problem, std::uint64_t seed, double step = 1e-6,
                                double floor = 1e-6);

// One case per differentiable primitive; each draw picks random shapes.
std::vector<GradCase> gradient_cases();

}  // namespace pmqa::testing

#endif  // PMQA_TESTS_SUPPORT_GRAD_CHECK_HPP_
