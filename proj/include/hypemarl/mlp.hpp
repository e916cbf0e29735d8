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
#include <string>
#include <vector>

#include "hypemarl/autodiff.hpp"
#include "hypemarl/rng.hpp"

namespace hypemarl {

/// Shape of a fully connected network.
struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim = 1;
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::identity;

  std::size_t layer_count() const { return hidden_dims.size() + 1; }
  std::size_t fan_in(std::size_t layer) const;
  std::size_t fan_out(std::size_t layer) const;
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

/// Sum over layers of fan_in * fan_out + fan_out.
std::size_t parameter_count(const MlpSpec& spec);

/// Location of one layer inside the flat parameter vector. Layers are stored
/// in order, each as a row-major weight matrix followed by its bias.
struct LayerSlice {
  std::size_t weight_offset;
  std::size_t bias_offset;
  std::size_t fan_in;
  std::size_t fan_out;
};

std::vector<LayerSlice> layer_slices(const MlpSpec& spec);

/// Flat parameter vector for one network.
struct WeightVector {
  MlpSpec spec;
  Vector values;

  WeightVector() = default;
  WeightVector(MlpSpec s, Vector v);
  static WeightVector zeros(const MlpSpec& s);

  /// Throws ConfigError on a length mismatch and TrainingError on non-finite entries.
  void validate() const;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
Vector glorot_init(const MlpSpec& spec, Rng& rng);

/// Single-sample evaluation.
Vector mlp_forward(const MlpSpec& spec, const WeightVector& theta, const Vector& x);

/// Batched evaluation; theta has one column (shared) or one column per sample.
Matrix mlp_forward_batch(const MlpSpec& spec, const Matrix& theta, const Matrix& x);

/// Records the network on a tape so gradients reach both theta and x.
ad::Var mlp_apply(ad::Tape& tape, const MlpSpec& spec, ad::Var theta, ad::Var x);

}  // namespace hypemarl
