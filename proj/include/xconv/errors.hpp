// Copyright (c) 2026 The xconv Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xconv {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument violates an operation's precondition (k > N, label out of range, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Object is in the wrong state for the request (e.g. optimizer step without gradients).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Configuration file or network layout is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered during computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file. Carries the byte offset where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Filesystem failure (unwritable path, missing file).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace xconv
