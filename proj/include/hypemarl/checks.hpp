// Copyright 2026 The HypeMARL Authors. All Rights Reserved.
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

#include <cstdint>
#include <string>
#include <vector>

namespace hypemarl {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Reverse-mode versus central-difference gradients for every network
/// family in the library (h = 1e-5, pass below 1e-5 relative error).
std::vector<CheckResult> run_grad_checks(std::uint64_t seed, std::size_t probes = 24);

/// Discrete identities of the transport operators on a rows x cols grid.
struct ToyTd3Result {
  /// Mean |pi(y) - clip(y_T - y, -1, 1)| over the probe states.
  double mean_error = 0.0;
  /// First evaluation point (in gradient updates) where the error fell
  /// below `tolerance`, or 0 if it never did.
  std::size_t updates_to_tolerance = 0;
  std::size_t updates = 0;
};

/// Single-agent TD3 on the scalar toy dynamics y' = y + u with a fixed
/// target; probes 100 states evenly spaced in [y_T - 2, y_T + 2].
ToyTd3Result run_toy_td3(std::uint64_t seed, std::size_t max_updates = 2000,
                         double y_target = 0.5, double tolerance = 0.05);

std::vector<CheckResult> run_env_checks(std::uint64_t seed, std::size_t rows = 17,
                                        std::size_t cols = 17);

}  // namespace hypemarl
