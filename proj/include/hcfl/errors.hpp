// Copyright 2026-present the hcfl authors
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

namespace hcfl {

/// Invalid experiment or generator configuration. `field()` names the
/// offending key so the CLI can report it.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Precondition violation on a pure operation (empty dataset, d <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a similarity or gamma computation meets a zero-norm vector.
class DegenerateDelta : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite loss or gradient during local training.
class NumericDivergence : public std::runtime_error {
 public:
  NumericDivergence(const std::string& what, int round, std::size_t step)
      : std::runtime_error(what + " (round " + std::to_string(round) + ", step " +
                           std::to_string(step) + ")"),
        round_(round),
        step_(step) {}
  int round() const noexcept { return round_; }
  std::size_t step() const noexcept { return step_; }

 private:
  int round_;
  std::size_t step_;
};

}  // namespace hcfl
