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
#include <optional>
#include <ostream>
#include <vector>

#include "hypemarl/config.hpp"
#include "hypemarl/marl.hpp"

namespace hypemarl {

/// HYPEMARL_OUTPUT_ROOT, or the working directory when unset.
std::filesystem::path output_root();

/// <root>/<output_dir>/<variant>/seed_<k>
std::filesystem::path run_directory(const std::filesystem::path& root, const RunConfig& cfg,
                                    std::uint64_t seed);

struct TrainOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<Variant> variant;
  std::optional<std::filesystem::path> resume;
  /// Stop once this many episodes are complete (a checkpoint is written).
  std::optional<std::size_t> until;
  bool force = false;
  bool quiet = false;
};

/// Outcome of one (variant, seed) run.
struct RunRecord {
  std::filesystem::path dir;
  std::uint64_t seed = 0;
  std::size_t episodes = 0;
  std::size_t real_episodes = 0;
  std::optional<EvalSummary> final_eval;
};

/// Trains every scheduled seed. Each run writes metrics.csv, eval.csv,
/// config.json and checkpoints/ below its run directory.
std::vector<RunRecord> cmd_train(const TrainOptions& opts, std::ostream& log);

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::size_t episodes = 5;
};

/// Writes per-episode traces and field snapshots next to the checkpoint's
/// run directory and returns the evaluation.
EvalSummary cmd_eval(const EvalOptions& opts, std::ostream& log);

/// Aggregates the seed_* runs below `run_dir` (or a single run directory)
/// into export_returns.csv and export_eval.csv with columns
/// episode,p25,p50,p75.
void cmd_export(const std::filesystem::path& run_dir, std::ostream& log);

}  // namespace hypemarl
