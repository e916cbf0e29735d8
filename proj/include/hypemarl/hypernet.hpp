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
#include <memory>
#include <vector>

#include "hypemarl/encoding.hpp"
#include "hypemarl/mlp.hpp"

namespace hypemarl {

/// Task parameters with per-component box bounds.
struct SystemParams {
  Vector values;
  Vector lower;
  Vector upper;

  SystemParams() = default;
  /// Unbounded parameters.
  explicit SystemParams(Vector v);
  SystemParams(Vector v, Vector lo, Vector hi);

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  void validate() const;
};

/// Hypernetwork mapping [PE(p); mu] to the flat weights of a target network.
struct HyperSpec {
  EncodingConfig encoding;
  std::size_t param_dim = 0;
  std::vector<std::size_t> hidden_dims{256};
  MlpSpec target;

  std::size_t input_dim() const { return encoding.dim + param_dim; }
  std::size_t output_dim() const { return parameter_count(target); }
  /// The hypernetwork itself: ReLU hidden layers, linear head.
  MlpSpec network() const;
  void validate() const;
};

struct ActionBounds {
  double low = -1.0;
  double high = 1.0;

  double center() const { return 0.5 * (low + high); }
  double half_width() const { return 0.5 * (high - low); }
  double clip(double u) const { return u < low ? low : (u > high ? high : u); }
};

/// Emits the main-network weights for one agent.
WeightVector hyper_forward(const HyperSpec& spec, const WeightVector& hyper_theta,
                           const Vector& encoding, const SystemParams& mu);

/// Hidden layers Glorot-initialized; the linear head is scaled row by row so
/// emitted weight slices match the Glorot std of the target layer they feed
/// and emitted biases start at zero.
WeightVector hyper_init(const HyperSpec& spec, Rng& rng);

/// Bounded action center + half_width * tanh-output of the policy network.
Vector policy_act(const WeightVector& policy_theta, const Vector& local_state,
                  const ActionBounds& bounds);

/// Scalar critic value of the concatenated (state, action).
double value_eval(const WeightVector& critic_theta, const Vector& local_state,
                  const Vector& action);

/// A network whose behaviour depends on a per-sample conditioning vector.
///
/// The trained parameters are either the network itself (the condition is
/// appended to the input) or a hypernetwork that turns the condition into
/// per-sample main-network weights.
class ConditionedNet {
 public:
  virtual ~ConditionedNet() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t condition_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  /// Spec of the trained flat parameter vector.
  virtual MlpSpec trained_spec() const = 0;
  virtual Vector init(Rng& rng) const = 0;

  virtual ad::Var apply(ad::Tape& tape, ad::Var theta, ad::Var input,
                        ad::Var condition) const = 0;
  virtual Matrix evaluate(const Vector& theta, const Matrix& input,
                          const Matrix& condition) const = 0;
  /// Freezes theta and one condition column per sample, for repeated
  /// evaluation on changing inputs (hypernetwork emission happens once).
  virtual std::function<Matrix(const Matrix&)> bind(const Vector& theta,
                                                     const Matrix& condition) const = 0;

  std::size_t parameter_count() const { return hypemarl::parameter_count(trained_spec()); }
};

class PlainNet final : public ConditionedNet {
 public:
  /// `spec.input_dim` must equal input_dim + condition_dim.
  PlainNet(MlpSpec spec, std::size_t condition_dim);

  std::size_t input_dim() const override { return spec_.input_dim - condition_dim_; }
  std::size_t condition_dim() const override { return condition_dim_; }
  std::size_t output_dim() const override { return spec_.output_dim; }
  MlpSpec trained_spec() const override { return spec_; }
  Vector init(Rng& rng) const override;
  ad::Var apply(ad::Tape& tape, ad::Var theta, ad::Var input, ad::Var condition) const override;
  Matrix evaluate(const Vector& theta, const Matrix& input, const Matrix& condition) const override;
  std::function<Matrix(const Matrix&)> bind(const Vector& theta,
                                             const Matrix& condition) const override;

 private:
  MlpSpec spec_;
  std::size_t condition_dim_;
};

class HyperNet final : public ConditionedNet {
 public:
  explicit HyperNet(HyperSpec spec);

  const HyperSpec& spec() const { return spec_; }
  std::size_t input_dim() const override { return spec_.target.input_dim; }
  std::size_t condition_dim() const override { return spec_.input_dim(); }
  std::size_t output_dim() const override { return spec_.target.output_dim; }
  MlpSpec trained_spec() const override { return spec_.network(); }
  Vector init(Rng& rng) const override;
  ad::Var apply(ad::Tape& tape, ad::Var theta, ad::Var input, ad::Var condition) const override;
  Matrix evaluate(const Vector& theta, const Matrix& input, const Matrix& condition) const override;
  std::function<Matrix(const Matrix&)> bind(const Vector& theta,
                                             const Matrix& condition) const override;

  /// Per-sample main-network weights (one column per condition column).
  Matrix emit(const Vector& theta, const Matrix& condition) const;

 private:
  HyperSpec spec_;
};

}  // namespace hypemarl
