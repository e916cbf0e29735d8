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
#include "hypemarl/mlp.hpp"

#include <cmath>
#include <string>

#include "hypemarl/error.hpp"

namespace hypemarl {

std::size_t MlpSpec::fan_in(std::size_t layer) const {
  return layer == 0 ? input_dim : hidden_dims[layer - 1];
}

std::size_t MlpSpec::fan_out(std::size_t layer) const {
  return layer + 1 == layer_count() ? output_dim : hidden_dims[layer];
}

void MlpSpec::validate() const {
  if (input_dim == 0 || output_dim == 0) throw ConfigError("MlpSpec: dimensions must be >= 1");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ConfigError("MlpSpec: hidden widths must be >= 1");
  }
}

std::size_t parameter_count(const MlpSpec& spec) {
  std::size_t total = 0;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    total += spec.fan_in(l) * spec.fan_out(l) + spec.fan_out(l);
  }
  return total;
}

std::vector<LayerSlice> layer_slices(const MlpSpec& spec) {
  std::vector<LayerSlice> slices;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const std::size_t in = spec.fan_in(l), out = spec.fan_out(l);
    slices.push_back({offset, offset + in * out, in, out});
    offset += in * out + out;
  }
  return slices;
}

WeightVector::WeightVector(MlpSpec s, Vector v) : spec(std::move(s)), values(std::move(v)) {}

WeightVector WeightVector::zeros(const MlpSpec& s) {
  return WeightVector(s, Vector::Zero(static_cast<Eigen::Index>(parameter_count(s))));
}

void WeightVector::validate() const {
  const std::size_t expected = parameter_count(spec);
  if (static_cast<std::size_t>(values.size()) != expected) {
    throw ConfigError("weight vector has " + std::to_string(values.size()) +
                      " entries, spec requires " + std::to_string(expected));
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw TrainingError("weight vector entry " + std::to_string(i) + " is not finite");
    }
  }
}

Vector glorot_init(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(parameter_count(spec)));
  for (const LayerSlice& s : layer_slices(spec)) {
    const double limit = std::sqrt(6.0 / static_cast<double>(s.fan_in + s.fan_out));
    for (std::size_t k = 0; k < s.fan_in * s.fan_out; ++k) {
      theta[static_cast<Eigen::Index>(s.weight_offset + k)] = rng.uniform(-limit, limit);
    }
  }
  return theta;
}

namespace {

void check_theta_rows(const MlpSpec& spec, Eigen::Index rows) {
  const std::size_t expected = parameter_count(spec);
  if (static_cast<std::size_t>(rows) != expected) {
    throw ConfigError("parameter vector has " + std::to_string(rows) + " entries, spec requires " +
                      std::to_string(expected));
  }
}

}  // namespace

Vector mlp_forward(const MlpSpec& spec, const WeightVector& theta, const Vector& x) {
  spec.validate();
  check_theta_rows(spec, theta.values.size());
  if (static_cast<std::size_t>(x.size()) != spec.input_dim) {
    throw ConfigError("mlp_forward: input has " + std::to_string(x.size()) +
                      " entries, spec expects " + std::to_string(spec.input_dim));
  }
  return mlp_forward_batch(spec, theta.values, x);
}

Matrix mlp_forward_batch(const MlpSpec& spec, const Matrix& theta, const Matrix& x) {
  check_theta_rows(spec, theta.rows());
  Matrix h = x;
  const auto slices = layer_slices(spec);
  for (std::size_t l = 0; l < slices.size(); ++l) {
    const LayerSlice& s = slices[l];
    h = dense_forward(theta, s.weight_offset, s.fan_out, s.fan_in, h);
    h = activate(h, l + 1 == slices.size() ? spec.output_activation : spec.hidden_activation);
  }
  return h;
}

ad::Var mlp_apply(ad::Tape& tape, const MlpSpec& spec, ad::Var theta, ad::Var x) {
  check_theta_rows(spec, tape.value(theta).rows());
  ad::Var h = x;
  const auto slices = layer_slices(spec);
  for (std::size_t l = 0; l < slices.size(); ++l) {
    const LayerSlice& s = slices[l];
    h = tape.dense(theta, s.weight_offset, s.fan_out, s.fan_in, h);
    h = tape.activate(h, l + 1 == slices.size() ? spec.output_activation : spec.hidden_activation);
  }
  return h;
}

}  // namespace hypemarl
