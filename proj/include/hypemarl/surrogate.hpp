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

#include <functional>
#include <vector>

#include "hypemarl/hypernet.hpp"
#include "hypemarl/optim.hpp"
#include "hypemarl/replay.hpp"
#include "hypemarl/td3.hpp"

namespace hypemarl {

struct SurrogateConfig {
  std::vector<std::size_t> hidden_dims{256};
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  /// Predict y' = y + net(y, u, mu) instead of y' = net(y, u, mu).
  bool residual = true;
  /// Extra fitting steps the first time the model is trained.
  std::size_t pretrain_steps = 2000;
  /// Rollouts stop once |y~| exceeds this multiple of the largest |y| seen in real data.
  double divergence_factor = 10.0;

  void validate() const;
};

/// Shared one-step local dynamics model (y_i, u_i, mu) -> y_i'. Agent
/// agnostic: it never sees positions or neighbours.
class SurrogateModel {
 public:
  SurrogateModel() = default;
  SurrogateModel(std::size_t state_dim, std::size_t action_dim, std::size_t param_dim,
                 SurrogateConfig config, Rng& rng);

  const MlpSpec& spec() const { return spec_; }
  const SurrogateConfig& config() const { return config_; }
  std::size_t state_dim() const { return state_dim_; }

  Vector predict(const Vector& y, const Vector& u, const Vector& mu) const;
  /// Column-per-sample prediction.
  Matrix predict_batch(const Matrix& y, const Matrix& u, const Matrix& mu) const;

  /// Mean over the batch of ||y' - F(y, u, mu)||^2 (condition rows hold mu).
  double loss(const TransitionBatch& batch) const;
  /// One Adam step on loss(batch); returns the pre-step loss.
  double train_step(const TransitionBatch& batch);

  Vector& weights() { return theta_; }
  const Vector& weights() const { return theta_; }
  AdamState& adam() { return adam_; }
  const AdamState& adam() const { return adam_; }

 private:
  ad::Var apply(ad::Tape& tape, ad::Var theta, const TransitionBatch& batch) const;

  std::size_t state_dim_ = 0;
  std::size_t action_dim_ = 0;
  std::size_t param_dim_ = 0;
  SurrogateConfig config_;
  MlpSpec spec_;
  Vector theta_;
  AdamState adam_;
};

/// Synthetic episode from a real initial condition.
struct SurrogateRollout {
  std::vector<LocalTransition> transitions;
  double episode_return = 0.0;  // mean over agents of summed rewards
  std::size_t steps = 0;
  bool truncated = false;
};

/// Advances every agent with the surrogate under exploration-noised policy
/// actions. Rewards are -(y~' - y_target)^2 per agent; the real dynamics
/// are never queried.
SurrogateRollout surrogate_rollout(const Vector& initial_state,
                                   const std::function<Matrix(const Matrix&)>& policy,
                                   const SurrogateModel& model, const Vector& target_state,
                                   const Vector& mu, std::size_t steps, double sigma,
                                   const ActionBounds& bounds, double state_limit, Rng& rng);

}  // namespace hypemarl
