// Copyright 2026 The eminv Authors
//
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

#pragma once

#include <stdexcept>

namespace eminv {

/// Base class of every failure raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input: config fields, dimensions, file contents, CLI flags.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A matrix required to be symmetric positive definite is not.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown inside a recursion (filter, smoother, sampler).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The tempering loop hit its generation cap before reaching temperature one.
class GenerationCapError : public Error {
 public:
  using Error::Error;
};

}  // namespace eminv
