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

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hypemarl/config.hpp"
#include "hypemarl/envs.hpp"
#include "hypemarl/metrics.hpp"
#include "hypemarl/replay.hpp"
#include "hypemarl/surrogate.hpp"
#include "hypemarl/td3.hpp"

namespace hypemarl {

/// Maps the full field y (one entry per node) to the joint action.
using JointPolicy = std::function<Vector(const Vector&)>;

/// Actor/critic stack of one variant plus the per-agent conditioning.
struct AgentStack {
  Variant variant = Variant::hypemarl;
  std::size_t agents = 0;
  std::size_t param_dim = 0;
  std::shared_ptr<const ConditionedNet> actor;
  std::shared_ptr<const ConditionedNet> critic;
  std::shared_ptr<const EncodingTable> encodings;  // hypernetwork variants only
  std::unique_ptr<Td3Learner> learner;

  /// single-rl: one global agent over the whole field.
  bool global() const { return variant == Variant::single_rl; }
  std::size_t state_dim() const { return global() ? agents : 1; }
  std::size_t action_dim() const { return state_dim(); }

  /// Condition columns of every acting unit for one mu.
  Matrix episode_conditions(const Vector& mu) const;
  /// Condition columns of minibatch samples (agent index and mu per column).
  Matrix batch_conditions(const std::vector<std::size_t>& agent_ids, const Matrix& mus) const;
  /// Noise-free joint policy with mu frozen.
  JointPolicy policy(const Vector& mu) const;
};

AgentStack variant_select(const RunConfig& cfg, std::size_t agents, std::size_t param_dim,
                          Rng& rng);

struct EpisodeResult {
  std::vector<LocalTransition> transitions;
  double episode_return = 0.0;  // mean over agents of time-summed local rewards
  std::vector<double> step_rewards;  // mean local reward per step
  Vector final_state;
  double final_mse = 0.0;  // mean over nodes of (y_T - y_target)^2
};

/// One real episode. `global` stores one whole-field transition per step
/// with the mean local reward; otherwise one transition per agent and step.
EpisodeResult run_episode(const DensityEnv& env, const EpisodeParams& ep,
                          const JointPolicy& policy, double sigma, bool global, Rng& rng,
                          bool record = true);

/// Fixed evaluation tuples drawn from their own seed.
std::vector<EpisodeParams> eval_tuples(const DensityEnv& env, std::uint64_t seed,
                                       std::size_t count);

struct EvalEpisode {
  EpisodeParams params;
  EpisodeResult controlled;
  EpisodeResult uncontrolled;  // u = 0 from the same initial condition
};

struct EvalSummary {
  std::vector<EvalEpisode> episodes;
  double mean_return = 0.0;
  double median_return = 0.0;
  double mean_final_mse = 0.0;
  double mean_baseline_mse = 0.0;
};

/// Noise-free rollouts of the stack's policy. For the vacuum env the
/// discrete mass identity is checked on every step.
EvalSummary evaluate(const DensityEnv& env, const AgentStack& stack,
                     const std::vector<EpisodeParams>& tuples);

/// True if episode e interacts with the real environment.
bool is_real_episode(const TrainSchedule& schedule, Variant variant, std::size_t e);
/// Real episodes among the first `episodes` of the schedule.
std::size_t count_real_episodes(const TrainSchedule& schedule, Variant variant,
                                std::size_t episodes);

DensityEnv make_env(const RunConfig& cfg);

/// Algorithm driver for one (config, seed) run. Deterministic given both.
class Trainer {
 public:
  Trainer(RunConfig cfg, std::uint64_t seed);

  const RunConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t episode() const { return episode_; }
  std::size_t real_episodes() const { return real_episodes_; }
  bool finished() const { return episode_ >= cfg_.schedule.episodes; }

  const DensityEnv& env() const { return env_; }
  const AgentStack& agents() const { return stack_; }
  AgentStack& agents() { return stack_; }
  const ReplayBuffer& real_buffer() const { return real_; }
  const ReplayBuffer& synthetic_buffer() const { return synthetic_; }
  const std::optional<SurrogateModel>& surrogate() const { return surrogate_; }
  const std::optional<EvalSummary>& last_eval() const { return last_eval_; }
  std::size_t agent_updates() const { return agent_updates_; }
  std::size_t surrogate_updates() const { return surrogate_updates_; }

  /// Runs the next episode with its updates and any due evaluation.
  /// Returns the metric rows produced (the episode row, then an eval row).
  std::vector<MetricRow> step();
  /// Steps until `episode() == until` or the schedule ends.
  void run(std::size_t until, const std::function<void(const MetricRow&)>& on_row);

  EvalSummary evaluate_now(std::size_t count) const;

  void save(const std::filesystem::path& dir) const;
  /// Restores a checkpoint. With `expected`, a config hash mismatch is an
  /// error unless `force`, in which case `expected` is used.
  static Trainer load(const std::filesystem::path& dir, const RunConfig* expected = nullptr,
                      bool force = false);

 private:
  struct Restore {};
  Trainer(Restore, RunConfig cfg, std::uint64_t seed);

  double sigma(std::size_t e) const;
  void add_real(const std::vector<LocalTransition>& ts);
  TransitionBatch sample_batch(bool synthetic_episode);
  void append_batch(const ReplayBuffer& buf, const std::vector<std::size_t>& slots,
                    TransitionBatch& batch, Eigen::Index offset,
                    std::vector<std::size_t>& agent_ids) const;
  double train_surrogate(std::size_t steps);

  RunConfig cfg_;
  std::uint64_t seed_;
  Rng rng_;
  DensityEnv env_;
  AgentStack stack_;
  NoiseSchedule noise_;
  ReplayBuffer real_;
  ReplayBuffer synthetic_;
  std::optional<SurrogateModel> surrogate_;
  double max_abs_real_ = 0.0;
  bool surrogate_ready_ = false;
  std::size_t episode_ = 0;
  std::size_t real_episodes_ = 0;
  std::size_t agent_updates_ = 0;
  std::size_t surrogate_updates_ = 0;
  std::optional<EvalSummary> last_eval_;
};

}  // namespace hypemarl
