// spectroforge/error.hpp

// Copyright 2026 The SpectroForge Authors
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
#include <string>

namespace spectroforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument or configuration value was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File was readable but its contents are malformed or unsupported.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// LPC analysis cannot produce a model for this frame (silence, or the
/// recursion lost positive-definiteness). Callers usually pass the raw
/// spectrum through instead of failing.
class DegenerateFrame : public Error {
 public:
  using Error::Error;
};

/// The polynomial root finder did not converge.
class RootFindingError : public Error {
 public:
  using Error::Error;
};

}  // namespace spectroforge
