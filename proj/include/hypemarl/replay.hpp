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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hypemarl/autodiff.hpp"
#include "hypemarl/rng.hpp"

namespace hypemarl {

/// One agent's (y_i, u_i, r_i, y_i', mu) tuple. The positional encoding is
/// looked up from the agent index, never copied.
struct LocalTransition {
  std::size_t agent = 0;
  Vector state;
  Vector action;
  double reward = 0.0;
  Vector next_state;
  Vector mu;
};

/// Fixed-capacity FIFO ring buffer with uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer() = default;
  ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim,
               std::size_t param_dim);

  void add(const LocalTransition& t);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// Total insertions since construction, including evicted ones.
  std::uint64_t inserted() const { return inserted_; }
  bool empty() const { return size_ == 0; }

  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  std::size_t param_dim() const { return param_dim_; }

  /// Logical index: 0 is the oldest stored transition.
  LocalTransition at(std::size_t i) const;

  /// Slot indices drawn uniformly with replacement.
  std::vector<std::size_t> sample_slots(std::size_t n, Rng& rng) const;

  // Raw slot access for minibatch assembly.
  std::size_t agent(std::size_t slot) const { return agents_[slot]; }
  double reward(std::size_t slot) const { return rewards_[slot]; }
  Eigen::Map<const Vector> state(std::size_t slot) const;
  Eigen::Map<const Vector> action(std::size_t slot) const;
  Eigen::Map<const Vector> next_state(std::size_t slot) const;
  Eigen::Map<const Vector> mu(std::size_t slot) const;

  // Serialization support.
  struct Raw {
    std::size_t capacity, state_dim, action_dim, param_dim, head, size;
    std::uint64_t inserted;
    std::vector<std::uint32_t> agents;
    std::vector<double> states, actions, rewards, next_states, mus;
  };
  Raw raw() const;
  static ReplayBuffer from_raw(Raw raw);

 private:
  std::size_t capacity_ = 0;
  std::size_t state_dim_ = 0;
  std::size_t action_dim_ = 0;
  std::size_t param_dim_ = 0;
  std::size_t head_ = 0;  // next slot to write
  std::size_t size_ = 0;
  std::uint64_t inserted_ = 0;
  std::vector<std::uint32_t> agents_;
  std::vector<double> states_;
  std::vector<double> actions_;
  std::vector<double> rewards_;
  std::vector<double> next_states_;
  std::vector<double> mus_;
};

}  // namespace hypemarl
