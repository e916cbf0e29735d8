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

#include <stdexcept>
#include <string>

namespace hypemarl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid dimensions, out-of-range hyperparameters, unknown config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. running backward twice on the same tape.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses or gradients during optimization.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Linear solver failures and other numerical breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint version or config-hash mismatch.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace hypemarl
