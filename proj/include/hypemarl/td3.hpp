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
#include <memory>
#include <optional>

#include "hypemarl/hypernet.hpp"
#include "hypemarl/optim.hpp"

namespace hypemarl {

struct Td3Hyper {
  double gamma = 0.99;
  std::size_t batch_size = 32;
  double target_noise = 0.2;  // std of the target-policy smoothing noise
  double noise_clip = 0.5;
  std::size_t policy_delay = 2;
  double polyak = 0.005;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double huber_delta = 1.0;

  void validate() const;
};

/// Column-per-sample minibatch. For critics the network input is
/// [state; action]; the condition column rides alongside unchanged.
struct TransitionBatch {
  Matrix state;
  Matrix action;
  Vector reward;
  Matrix next_state;
  Matrix condition;

  std::size_t size() const { return static_cast<std::size_t>(reward.size()); }
};

/// A trained parameter vector, its slowly tracking target copy and its optimizer state.
struct TrainedParams {
  Vector online;
  Vector target;
  AdamState adam;

  TrainedParams() = default;
  explicit TrainedParams(Vector init);
};

struct Td3Nets {
  TrainedParams actor;
  TrainedParams critic1;
  TrainedParams critic2;
};

/// target' = rho * online + (1 - rho) * target, elementwise.
Vector polyak_update(const Vector& target, const Vector& online, double rho);

/// u + N(0, sigma^2) clipped to the action box.
Matrix explore(const Matrix& u, double sigma, const ActionBounds& bounds, Rng& rng);

/// Exploration std per episode: constant through warm-up, then linear decay
/// that lands exactly on `final` at the last episode.
struct NoiseSchedule {
  double initial = 1.0;
  double final = 0.25;
  std::size_t warmup = 25;
  std::size_t episodes = 500;

  double at(std::size_t episode) const;
};

/// Twin-critic TD3 over conditioned networks. The same learner drives plain
/// shared networks and hypernetworks: only the ConditionedNet differs.
class Td3Learner {
 public:
  Td3Learner(std::shared_ptr<const ConditionedNet> actor,
             std::shared_ptr<const ConditionedNet> critic, ActionBounds bounds, Td3Hyper hyper,
             Rng& init_rng);

  /// Noise-free actions for a batch of states.
  Matrix act(const Matrix& state, const Matrix& condition) const;
  /// Policy with the condition frozen, e.g. for one episode.
  std::function<Matrix(const Matrix&)> bind_policy(const Matrix& condition) const;

  Vector critic_values(int which, const Matrix& state, const Matrix& action,
                       const Matrix& condition) const;

  /// r + gamma * clip(min(Q1', Q2'), q_min, q_max) evaluated with the target
  /// networks at the smoothed target action; q_min and q_max are the extreme
  /// twin estimates over the batch. Pure values, nothing is recorded.
  Vector target_value(const TransitionBatch& batch, Rng& rng) const;

  /// One Adam step on each critic towards the fixed targets; returns the
  /// mean of the two Huber losses.
  double critic_update(const TransitionBatch& batch, const Vector& targets);

  /// One Adam step on the actor for -Q1/2 - Q2/2 at u = pi(y).
  double actor_update(const TransitionBatch& batch);

  void update_targets();

  struct StepLosses {
    double critic = 0.0;
    std::optional<double> actor;
  };

  /// Critic update, then (every policy_delay steps) actor and target update.
  StepLosses train_step(const TransitionBatch& batch, Rng& rng);

  const Td3Nets& nets() const { return nets_; }
  Td3Nets& nets() { return nets_; }
  const Td3Hyper& hyper() const { return hyper_; }
  const ActionBounds& bounds() const { return bounds_; }
  const ConditionedNet& actor_net() const { return *actor_; }
  const ConditionedNet& critic_net() const { return *critic_; }
  std::int64_t critic_steps() const { return critic_steps_; }
  std::int64_t actor_steps() const { return actor_steps_; }
  void set_counters(std::int64_t critic_steps, std::int64_t actor_steps);

 private:
  Matrix scale_actions(const Matrix& raw) const;
  void check_batch(const TransitionBatch& batch) const;

  std::shared_ptr<const ConditionedNet> actor_;
  std::shared_ptr<const ConditionedNet> critic_;
  ActionBounds bounds_;
  Td3Hyper hyper_;
  Td3Nets nets_;
  std::int64_t critic_steps_ = 0;
  std::int64_t actor_steps_ = 0;
};

}  // namespace hypemarl
