/*
 * Copyright 2026 The bvc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bvc {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand extents do not conform to an operation's shape rules.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An argument is outside the domain of an operation (empty input, bad range,
// non-finite evaluation).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller broke an API contract (wrong mode for a model, non-scalar loss, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Object is in the wrong state for the request.
class StateError : public Error {
 public:
  using Error::Error;
};

// A class needed for balancing is missing.
class BalanceError : public Error {
 public:
  using Error::Error;
};

// Malformed file; carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// Numerical failure during optimisation.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Bad command line or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace bvc
