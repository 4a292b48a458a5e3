/*
 * Copyright 2026 The stgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace stgp {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid kernel/run configuration (unknown family, out-of-box parameter, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed user input (non-finite coordinates, asymmetric Gram, bad shapes).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Observations contain NaN where complete data is required.
class MissingDataError : public InputError {
 public:
  using InputError::InputError;
};

/// File could not be read/written or failed to parse.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: unstable realization, non-positive innovation
/// variance, failed factorization, degenerate GCV denominator.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Every start point of a hyper-parameter search failed.
class OptimizationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A verification run exceeded its tolerance.
class ToleranceError : public Error {
 public:
  using Error::Error;
};

}  // namespace stgp
