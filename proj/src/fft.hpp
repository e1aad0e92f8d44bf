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

#ifndef PMQA_SRC_FFT_HPP_
#define PMQA_SRC_FFT_HPP_

#include <complex>
#include <cstddef>
#include <span>

namespace pmqa::internal {

// Real-to-complex FFT of a fixed size, backed by FFTW. Not thread-safe per
// instance; instances may live on different threads.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  // input.size() == size(); output.size() == bins().
  void forward(std::span<const double> input, std::span<std::complex<double>> output);

 private:
  std::size_t size_;
  double* in_;
  void* out_;
  void* plan_;
};

}  // namespace pmqa::internal

#endif  // PMQA_SRC_FFT_HPP_
