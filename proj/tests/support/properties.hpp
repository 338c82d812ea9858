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

// Randomized invariants over the library, shared by the properties binary
// and the acceptance run.

#include <cstdint>
#include <string>
#include <vector>

#include "hcfl/harness.hpp"

namespace props {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// `cfg` supplies the population and simulation used by the full-run checks.
std::vector<PropertyResult> run_all(const hcfl::ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace props
