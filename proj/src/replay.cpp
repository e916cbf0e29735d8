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
#include "hypemarl/replay.hpp"

#include <algorithm>
#include <cmath>

#include "hypemarl/error.hpp"

namespace hypemarl {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim,
                           std::size_t param_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim), param_dim_(param_dim) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be >= 1");
}

namespace {

void write_slot(std::vector<double>& store, std::size_t slot, std::size_t dim, const Vector& v,
                const char* field) {
  if (static_cast<std::size_t>(v.size()) != dim) {
    throw ConfigError(std::string("transition field '") + field + "' has the wrong dimension");
  }
  if (store.size() < (slot + 1) * dim) store.resize((slot + 1) * dim);
  std::copy(v.data(), v.data() + dim, store.begin() + static_cast<std::ptrdiff_t>(slot * dim));
}

}  // namespace

void ReplayBuffer::add(const LocalTransition& t) {
  if (!std::isfinite(t.reward) || !t.state.allFinite() || !t.action.allFinite() ||
      !t.next_state.allFinite() || !t.mu.allFinite()) {
    throw TrainingError("refusing to store a non-finite transition");
  }
  const std::size_t slot = head_;
  write_slot(states_, slot, state_dim_, t.state, "state");
  write_slot(actions_, slot, action_dim_, t.action, "action");
  write_slot(next_states_, slot, state_dim_, t.next_state, "next_state");
  write_slot(mus_, slot, param_dim_, t.mu, "mu");
  if (rewards_.size() <= slot) {
    rewards_.resize(slot + 1);
    agents_.resize(slot + 1);
  }
  rewards_[slot] = t.reward;
  agents_[slot] = static_cast<std::uint32_t>(t.agent);
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  ++inserted_;
}

Eigen::Map<const Vector> ReplayBuffer::state(std::size_t slot) const {
  return {states_.data() + slot * state_dim_, static_cast<Eigen::Index>(state_dim_)};
}
Eigen::Map<const Vector> ReplayBuffer::action(std::size_t slot) const {
  return {actions_.data() + slot * action_dim_, static_cast<Eigen::Index>(action_dim_)};
}
Eigen::Map<const Vector> ReplayBuffer::next_state(std::size_t slot) const {
  return {next_states_.data() + slot * state_dim_, static_cast<Eigen::Index>(state_dim_)};
}
Eigen::Map<const Vector> ReplayBuffer::mu(std::size_t slot) const {
  return {mus_.data() + slot * param_dim_, static_cast<Eigen::Index>(param_dim_)};
}

LocalTransition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw UsageError("replay index out of range");
  const std::size_t slot = (head_ + capacity_ - size_ + i) % capacity_;
  LocalTransition t;
  t.agent = agents_[slot];
  t.state = state(slot);
  t.action = action(slot);
  t.reward = rewards_[slot];
  t.next_state = next_state(slot);
  t.mu = mu(slot);
  return t;
}

std::vector<std::size_t> ReplayBuffer::sample_slots(std::size_t n, Rng& rng) const {
  if (size_ == 0) throw UsageError("cannot sample from an empty replay buffer");
  std::vector<std::size_t> slots(n);
  for (auto& s : slots) s = rng.index(size_);
  return slots;
}

ReplayBuffer::Raw ReplayBuffer::raw() const {
  return Raw{capacity_, state_dim_, action_dim_, param_dim_, head_, size_, inserted_,
             agents_,   states_,    actions_,    rewards_,   next_states_, mus_};
}

ReplayBuffer ReplayBuffer::from_raw(Raw raw) {
  ReplayBuffer b(raw.capacity, raw.state_dim, raw.action_dim, raw.param_dim);
  const std::size_t stored = raw.rewards.size();
  if (raw.size > raw.capacity || raw.head >= raw.capacity || stored < raw.size ||
      raw.agents.size() != stored || raw.states.size() != stored * raw.state_dim ||
      raw.next_states.size() != stored * raw.state_dim ||
      raw.actions.size() != stored * raw.action_dim || raw.mus.size() != stored * raw.param_dim) {
    throw IoError("corrupt replay buffer record");
  }
  b.head_ = raw.head;
  b.size_ = raw.size;
  b.inserted_ = raw.inserted;
  b.agents_ = std::move(raw.agents);
  b.states_ = std::move(raw.states);
  b.actions_ = std::move(raw.actions);
  b.rewards_ = std::move(raw.rewards);
  b.next_states_ = std::move(raw.next_states);
  b.mus_ = std::move(raw.mus);
  return b;
}

}  // namespace hypemarl
