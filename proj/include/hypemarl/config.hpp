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
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hypemarl/encoding.hpp"
#include "hypemarl/envs.hpp"
#include "hypemarl/surrogate.hpp"
#include "hypemarl/td3.hpp"

namespace hypemarl {

enum class Variant { hypemarl, mb_hypemarl, marl, single_rl };

Variant variant_from_string(const std::string& name);
const char* to_string(Variant v);
/// True for the two hypernetwork variants.
bool uses_hypernet(Variant v);

struct TrainSchedule {
  std::size_t episodes = 500;
  std::size_t warmup = 25;
  std::size_t eval_period = 50;
  std::size_t eval_episodes = 5;
  std::uint64_t eval_seed = 20240607;
  /// Surrogate episodes per real episode after warm-up (MB variant only).
  std::size_t surrogate_ratio = 10;
  /// Agent minibatch updates after each episode; 0 means one per env step.
  std::size_t updates_per_episode = 0;
  /// Surrogate updates after each real episode; 0 means updates_per_episode.
  std::size_t surrogate_updates = 0;
  /// Fraction of each agent minibatch drawn from real data in MB mode.
  /// Negative: sample only from the buffer the current episode wrote.
  double real_fraction = -1.0;
  std::size_t buffer_capacity = 500000;
  /// 0 writes a checkpoint only at the end of the run.
  std::size_t checkpoint_period = 0;
  /// Exploration std as fractions of the action half-width.
  double noise_initial = 0.2;
  double noise_final = 0.05;

  /// Agent updates per episode for an episode of env_steps steps.
  std::size_t updates(std::size_t env_steps) const;
  void validate() const;
};

struct NetworkConfig {
  /// Hidden layers of the hypernetwork-emitted policy and critic.
  std::vector<std::size_t> main_hidden{256};
  /// Hidden layers of the hypernetworks themselves.
  std::vector<std::size_t> hyper_hidden{256};
  /// Hidden layers of the shared nets of the marl and single-rl baselines.
  std::vector<std::size_t> plain_hidden{256, 256};

  void validate() const;
};

struct RunConfig {
  Variant variant = Variant::hypemarl;
  EnvKind env = EnvKind::vacuum;
  std::size_t grid_rows = 33;
  std::size_t grid_cols = 33;
  LayoutScheme layout = LayoutScheme::row_major;
  EnvParams env_params = EnvParams::vacuum();
  TrainSchedule schedule;
  /// Learning rates here are ignored; see td3_hyper().
  Td3Hyper td3;
  /// Target smoothing std and clip as fractions of the action half-width.
  double target_noise_scale = 0.2;
  double noise_clip_scale = 0.5;
  std::optional<double> actor_lr;
  std::optional<double> critic_lr;
  EncodingConfig encoding;
  NetworkConfig networks;
  SurrogateConfig surrogate;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "runs";

  /// TD3 constants with the variant-dependent learning-rate defaults and
  /// absolute noise levels filled in.
  Td3Hyper td3_hyper() const;
  void validate() const;
};

/// Canonical JSON text of every field that affects a run (seeds and output
/// directory excluded).
std::string canonical_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);
RunConfig config_from_canonical(const std::string& text);

/// Parses TOML-style text: [section] headers, key = value lines, '#'
/// comments. Values are numbers, booleans, quoted strings or flat arrays.
/// Unknown sections or keys are rejected.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);

}  // namespace hypemarl
