// Copyright 2026 The Flipset Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FLIPSET_ERROR_HPP_
#define FLIPSET_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace flipset {

// Broad failure classes. The CLI maps them to exit codes and the service to
// HTTP statuses, so every throw site picks exactly one.
enum class ErrorKind { kInput, kData, kNumerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Bad arguments or configuration: dimension mismatches, invalid
// hyperparameters, out-of-range indices, unreadable config files.
class InputError : public Error {
 public:
  explicit InputError(const std::string& message)
      : Error(ErrorKind::kInput, message) {}
};

// Malformed or degenerate data: bad rows, non-binary labels, empty
// vocabularies, single-class training remainders.
class DataError : public Error {
 public:
  explicit DataError(const std::string& message)
      : Error(ErrorKind::kData, message) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message)
      : Error(ErrorKind::kNumerical, message) {}
};

// Newton training did not reach the gradient tolerance.
class TrainingError : public NumericalError {
 public:
  TrainingError(const std::string& message, double last_grad_norm, int iterations)
      : NumericalError(message),
        last_grad_norm_(last_grad_norm),
        iterations_(iterations) {}
  double last_grad_norm() const noexcept { return last_grad_norm_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_grad_norm_;
  int iterations_;
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInput:
      return 2;
    case ErrorKind::kData:
      return 3;
    case ErrorKind::kNumerical:
      return 4;
  }
  return 1;
}

}  // namespace flipset

#endif  // FLIPSET_ERROR_HPP_
