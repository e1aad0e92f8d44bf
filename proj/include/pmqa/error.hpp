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

#ifndef PMQA_ERROR_HPP_
#define PMQA_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace pmqa {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument does not hold (out-of-range intensity,
// non-positive sample rate, empty batch, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Tensor or buffer shapes are incompatible.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

// A file was readable but its content does not follow the expected format.
class FormatError : public Error {
 public:
  using Error::Error;
};

enum class WavErrc {
  kIo,
  kMalformedHeader,
  kUnsupportedFormat,
  kTruncatedData,
};

class WavError : public Error {
 public:
  WavError(WavErrc code, const std::string& what) : Error(what), code_(code) {}
  WavErrc code() const { return code_; }

 private:
  WavErrc code_;
};

// Correlation is undefined (constant input) or inputs are unusable.
class StatisticsError : public Error {
 public:
  using Error::Error;
};

// Raised when training produces a non-finite loss or gradient.
class TrainingHalted : public Error {
 public:
  using Error::Error;
};

}  // namespace pmqa

#endif  // PMQA_ERROR_HPP_
