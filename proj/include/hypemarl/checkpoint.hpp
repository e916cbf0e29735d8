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
#include <filesystem>
#include <string>
#include <vector>

#include "hypemarl/autodiff.hpp"

namespace hypemarl {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "hypemarl-checkpoint";

/// Manifest fields needed before a full restore.
struct CheckpointInfo {
  int version = 0;
  std::uint64_t config_hash = 0;
  std::string config;  // canonical JSON text
  std::uint64_t seed = 0;
  std::size_t episode = 0;
};

/// Accepts a checkpoint directory or its manifest.json.
std::filesystem::path checkpoint_dir(const std::filesystem::path& path);
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

/// Little-endian f64 blobs.
void write_f64_blob(const std::filesystem::path& path, const double* data, std::size_t n);
std::vector<double> read_f64_blob(const std::filesystem::path& path);

std::string hash_hex(std::uint64_t h);

}  // namespace hypemarl
