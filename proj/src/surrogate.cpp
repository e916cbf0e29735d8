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
#include "hypemarl/surrogate.hpp"

#include <cmath>

#include "hypemarl/envs.hpp"
#include "hypemarl/error.hpp"

namespace hypemarl {

void SurrogateConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("surrogate.learning_rate must be >= 0");
  if (batch_size == 0) throw ConfigError("surrogate.batch_size must be >= 1");
  if (!(divergence_factor > 0.0)) throw ConfigError("surrogate.divergence_factor must be > 0");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ConfigError("surrogate.hidden_dims entries must be >= 1");
  }
}

SurrogateModel::SurrogateModel(std::size_t state_dim, std::size_t action_dim,
                               std::size_t param_dim, SurrogateConfig config, Rng& rng)
    : state_dim_(state_dim), action_dim_(action_dim), param_dim_(param_dim), config_(std::move(config)) {
  config_.validate();
  spec_.input_dim = state_dim + action_dim + param_dim;
  spec_.hidden_dims = config_.hidden_dims;
  spec_.output_dim = state_dim;
  spec_.hidden_activation = Activation::relu;
  spec_.output_activation = Activation::identity;
  spec_.validate();
  theta_ = glorot_init(spec_, rng);
  adam_ = AdamState(theta_.size());
}

Matrix SurrogateModel::predict_batch(const Matrix& y, const Matrix& u, const Matrix& mu) const {
  if (static_cast<std::size_t>(y.rows()) != state_dim_ ||
      static_cast<std::size_t>(u.rows()) != action_dim_ ||
      static_cast<std::size_t>(mu.rows()) != param_dim_ || u.cols() != y.cols() ||
      mu.cols() != y.cols()) {
    throw ConfigError("surrogate input dimensions do not match the model");
  }
  Matrix x(spec_.input_dim, y.cols());
  x << y, u, mu;
  Matrix out = mlp_forward_batch(spec_, theta_, x);
  if (config_.residual) out += y;
  return out;
}

Vector SurrogateModel::predict(const Vector& y, const Vector& u, const Vector& mu) const {
  return predict_batch(y, u, mu).col(0);
}

ad::Var SurrogateModel::apply(ad::Tape& tape, ad::Var theta, const TransitionBatch& batch) const {
  ad::Var y = tape.constant(batch.state);
  ad::Var x = tape.concat_rows({y, tape.constant(batch.action), tape.constant(batch.condition)});
  ad::Var out = mlp_apply(tape, spec_, theta, x);
  return config_.residual ? tape.add(out, y) : out;
}

double SurrogateModel::loss(const TransitionBatch& batch) const {
  if (batch.size() == 0) throw UsageError("surrogate loss on an empty minibatch");
  const Matrix pred = predict_batch(batch.state, batch.action, batch.condition);
  return (batch.next_state - pred).colwise().squaredNorm().mean();
}

double SurrogateModel::train_step(const TransitionBatch& batch) {
  if (batch.size() == 0) throw UsageError("surrogate update on an empty minibatch");
  ad::Tape tape;
  ad::Var theta = tape.variable(theta_);
  ad::Var pred = apply(tape, theta, batch);
  ad::Var err = tape.sub(tape.constant(batch.next_state), pred);
  // Sum over state dimensions, mean over samples.
  ad::Var loss = tape.affine(tape.mean(tape.square(err)), static_cast<double>(state_dim_), 0.0);
  const double value = tape.value(loss)(0, 0);
  if (!std::isfinite(value)) throw TrainingError("surrogate loss is not finite");
  tape.backward(loss);
  const Matrix g = tape.take_grad(theta);
  adam_step(theta_, g.col(0), adam_, config_.learning_rate);
  return value;
}

SurrogateRollout surrogate_rollout(const Vector& initial_state,
                                   const std::function<Matrix(const Matrix&)>& policy,
                                   const SurrogateModel& model, const Vector& target_state,
                                   const Vector& mu, std::size_t steps, double sigma,
                                   const ActionBounds& bounds, double state_limit, Rng& rng) {
  SurrogateRollout out;
  const auto n = initial_state.size();
  if (target_state.size() != n) throw ConfigError("surrogate_rollout: target size mismatch");
  if (model.state_dim() != 1) throw ConfigError("surrogate_rollout expects scalar local states");
  Matrix y = initial_state.transpose();  // 1 x N, one column per agent
  const Matrix mus = mu.replicate(1, n);
  Vector totals = Vector::Zero(n);
  out.transitions.reserve(static_cast<std::size_t>(n) * steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const Matrix u = explore(policy(y), sigma, bounds, rng);
    const Matrix next = model.predict_batch(y, u, mus);
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > state_limit) {
      out.truncated = true;
      break;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      LocalTransition tr;
      tr.agent = static_cast<std::size_t>(i);
      tr.state = y.col(i);
      tr.action = u.col(i);
      tr.reward = local_reward(next(0, i), target_state[i]);
      tr.next_state = next.col(i);
      tr.mu = mu;
      totals[i] += tr.reward;
      out.transitions.push_back(std::move(tr));
    }
    y = next;
    ++out.steps;
  }
  out.episode_return = n > 0 ? totals.mean() : 0.0;
  return out;
}

}  // namespace hypemarl
