// Copyright 2026 The zipzo Authors. All Rights Reserved.
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
#include <cstdint>
#include <stdexcept>
#include <string>

namespace zipzo {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimensions : public Error {
 public:
  using Error::Error;
};

class InvalidShape : public Error {
 public:
  using Error::Error;
};

class ContractViolation : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

// The objective returned NaN or +-inf.
class EvaluationFailure : public Error {
 public:
  using Error::Error;
};

// Raised when the ledger cannot fund the requested evaluations. `consumed`
// counts evaluations already charged by the failing call before it stopped.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(std::uint64_t remaining, std::uint64_t requested,
                 std::uint64_t consumed = 0)
      : Error("query budget exceeded: requested " + std::to_string(requested) +
              ", remaining " + std::to_string(remaining) +
              (consumed ? ", consumed before abort " + std::to_string(consumed)
                        : std::string())),
        remaining_(remaining),
        requested_(requested),
        consumed_(consumed) {}

  std::uint64_t remaining() const noexcept { return remaining_; }
  std::uint64_t requested() const noexcept { return requested_; }
  std::uint64_t consumed() const noexcept { return consumed_; }

 private:
  std::uint64_t remaining_;
  std::uint64_t requested_;
  std::uint64_t consumed_;
};

// Config parse/validation failure. `line` is 1-based, 0 when not tied to a line.
class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace zipzo
