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
#include "hypemarl/td3.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hypemarl/error.hpp"

namespace hypemarl {

void Td3Hyper::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("td3.gamma must lie in [0, 1)");
  if (batch_size == 0) throw ConfigError("td3.batch_size must be >= 1");
  if (!(target_noise >= 0.0)) throw ConfigError("td3.target_noise must be >= 0");
  if (!(noise_clip > 0.0)) throw ConfigError("td3.noise_clip must be > 0");
  if (policy_delay == 0) throw ConfigError("td3.policy_delay must be >= 1");
  if (!(polyak > 0.0 && polyak <= 1.0)) throw ConfigError("td3.polyak must lie in (0, 1]");
  if (!(actor_lr >= 0.0)) throw ConfigError("td3.actor_lr must be >= 0");
  if (!(critic_lr >= 0.0)) throw ConfigError("td3.critic_lr must be >= 0");
  if (!(huber_delta > 0.0)) throw ConfigError("td3.huber_delta must be > 0");
}

TrainedParams::TrainedParams(Vector init) : online(init), target(init), adam(init.size()) {}

Vector polyak_update(const Vector& target, const Vector& online, double rho) {
  if (target.size() != online.size()) throw ConfigError("polyak_update: shape mismatch");
  return rho * online + (1.0 - rho) * target;
}

Matrix explore(const Matrix& u, double sigma, const ActionBounds& bounds, Rng& rng) {
  if (!(sigma >= 0.0)) throw ConfigError("explore: sigma must be >= 0");
  Matrix out = u;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double noise = sigma > 0.0 ? sigma * rng.normal() : 0.0;
      out(i, j) = bounds.clip(out(i, j) + noise);
    }
  }
  return out;
}

double NoiseSchedule::at(std::size_t episode) const {
  if (episode < warmup) return initial;
  if (episodes == 0 || episode + 1 >= episodes) return final;
  const double span = static_cast<double>(episodes - 1 - warmup);
  const double frac = static_cast<double>(episode - warmup) / span;
  return initial + (final - initial) * frac;
}

Td3Learner::Td3Learner(std::shared_ptr<const ConditionedNet> actor,
                       std::shared_ptr<const ConditionedNet> critic, ActionBounds bounds,
                       Td3Hyper hyper, Rng& init_rng)
    : actor_(std::move(actor)), critic_(std::move(critic)), bounds_(bounds), hyper_(hyper) {
  hyper_.validate();
  if (critic_->input_dim() != actor_->input_dim() + actor_->output_dim()) {
    throw ConfigError("critic input must be [state; action]");
  }
  if (critic_->output_dim() != 1) throw ConfigError("critic must output a scalar");
  if (critic_->condition_dim() != actor_->condition_dim()) {
    throw ConfigError("actor and critic must share the condition layout");
  }
  nets_.actor = TrainedParams(actor_->init(init_rng));
  nets_.critic1 = TrainedParams(critic_->init(init_rng));
  nets_.critic2 = TrainedParams(critic_->init(init_rng));
}

void Td3Learner::set_counters(std::int64_t critic_steps, std::int64_t actor_steps) {
  critic_steps_ = critic_steps;
  actor_steps_ = actor_steps;
}

Matrix Td3Learner::scale_actions(const Matrix& raw) const {
  return (bounds_.center() + bounds_.half_width() * raw.array()).matrix();
}

Matrix Td3Learner::act(const Matrix& state, const Matrix& condition) const {
  return scale_actions(actor_->evaluate(nets_.actor.online, state, condition));
}

std::function<Matrix(const Matrix&)> Td3Learner::bind_policy(const Matrix& condition) const {
  auto raw = actor_->bind(nets_.actor.online, condition);
  return [this, raw = std::move(raw)](const Matrix& state) { return scale_actions(raw(state)); };
}

Vector Td3Learner::critic_values(int which, const Matrix& state, const Matrix& action,
                                 const Matrix& condition) const {
  Matrix x(state.rows() + action.rows(), state.cols());
  x << state, action;
  const Vector& theta = which == 1 ? nets_.critic1.online : nets_.critic2.online;
  return critic_->evaluate(theta, x, condition).row(0).transpose();
}

void Td3Learner::check_batch(const TransitionBatch& batch) const {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw UsageError("empty minibatch");
  if (batch.state.cols() != n || batch.action.cols() != n || batch.next_state.cols() != n ||
      batch.condition.cols() != n) {
    throw ConfigError("minibatch fields disagree on the number of samples");
  }
  if (static_cast<std::size_t>(batch.state.rows()) != actor_->input_dim() ||
      static_cast<std::size_t>(batch.action.rows()) != actor_->output_dim() ||
      static_cast<std::size_t>(batch.condition.rows()) != actor_->condition_dim()) {
    throw ConfigError("minibatch dimensions do not match the networks");
  }
}

Vector Td3Learner::target_value(const TransitionBatch& batch, Rng& rng) const {
  check_batch(batch);
  Matrix next_action =
      scale_actions(actor_->evaluate(nets_.actor.target, batch.next_state, batch.condition));
  const double sigma = hyper_.target_noise;
  const double c = hyper_.noise_clip;
  for (Eigen::Index j = 0; j < next_action.cols(); ++j) {
    for (Eigen::Index i = 0; i < next_action.rows(); ++i) {
      const double eps = sigma > 0.0 ? std::clamp(sigma * rng.normal(), -c, c) : 0.0;
      next_action(i, j) = bounds_.clip(next_action(i, j) + eps);
    }
  }
  Matrix x(batch.next_state.rows() + next_action.rows(), batch.next_state.cols());
  x << batch.next_state, next_action;
  const Vector q1 = critic_->evaluate(nets_.critic1.target, x, batch.condition).row(0).transpose();
  const Vector q2 = critic_->evaluate(nets_.critic2.target, x, batch.condition).row(0).transpose();
  const double q_min = std::min(q1.minCoeff(), q2.minCoeff());
  const double q_max = std::max(q1.maxCoeff(), q2.maxCoeff());
  Vector target(q1.size());
  for (Eigen::Index b = 0; b < q1.size(); ++b) {
    const double clipped = std::clamp(std::min(q1[b], q2[b]), q_min, q_max);
    target[b] = batch.reward[b] + hyper_.gamma * clipped;
  }
  return target;
}

namespace {

void require_finite(double loss, const char* what) {
  if (!std::isfinite(loss)) throw TrainingError(std::string(what) + " loss is not finite");
}

}  // namespace

double Td3Learner::critic_update(const TransitionBatch& batch, const Vector& targets) {
  check_batch(batch);
  if (targets.size() != static_cast<Eigen::Index>(batch.size())) {
    throw ConfigError("critic_update: one target per sample required");
  }
  Matrix x(batch.state.rows() + batch.action.rows(), batch.state.cols());
  x << batch.state, batch.action;
  double total = 0.0;
  for (TrainedParams* p : {&nets_.critic1, &nets_.critic2}) {
    ad::Tape tape;
    ad::Var theta = tape.variable(p->online);
    ad::Var q = critic_->apply(tape, theta, tape.constant(x), tape.constant(batch.condition));
    ad::Var residual = tape.sub(tape.constant(targets.transpose()), q);
    ad::Var loss = tape.mean(tape.huber(residual, hyper_.huber_delta));
    const double value = tape.value(loss)(0, 0);
    require_finite(value, "critic");
    tape.backward(loss);
    const Matrix g = tape.take_grad(theta);
    adam_step(p->online, g.col(0), p->adam, hyper_.critic_lr);
    total += value;
  }
  ++critic_steps_;
  return 0.5 * total;
}

double Td3Learner::actor_update(const TransitionBatch& batch) {
  check_batch(batch);
  ad::Tape tape;
  ad::Var theta = tape.variable(nets_.actor.online);
  ad::Var state = tape.constant(batch.state);
  ad::Var condition = tape.constant(batch.condition);
  ad::Var raw = actor_->apply(tape, theta, state, condition);
  ad::Var action = tape.affine(raw, bounds_.half_width(), bounds_.center());
  ad::Var x = tape.concat_rows({state, action});
  ad::Var q1 = critic_->apply(tape, tape.constant(nets_.critic1.online), x, condition);
  ad::Var q2 = critic_->apply(tape, tape.constant(nets_.critic2.online), x, condition);
  ad::Var loss = tape.mean(tape.affine(tape.add(q1, q2), -0.5, 0.0));
  const double value = tape.value(loss)(0, 0);
  require_finite(value, "actor");
  tape.backward(loss);
  const Matrix g = tape.take_grad(theta);
  adam_step(nets_.actor.online, g.col(0), nets_.actor.adam, hyper_.actor_lr);
  ++actor_steps_;
  return value;
}

void Td3Learner::update_targets() {
  for (TrainedParams* p : {&nets_.actor, &nets_.critic1, &nets_.critic2}) {
    const double rho = hyper_.polyak;
    p->target = rho * p->online + (1.0 - rho) * p->target;
  }
}

Td3Learner::StepLosses Td3Learner::train_step(const TransitionBatch& batch, Rng& rng) {
  StepLosses out;
  const Vector targets = target_value(batch, rng);
  out.critic = critic_update(batch, targets);
  if (critic_steps_ % static_cast<std::int64_t>(hyper_.policy_delay) == 0) {
    out.actor = actor_update(batch);
    update_targets();
  }
  return out;
}

}  // namespace hypemarl
