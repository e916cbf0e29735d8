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
#include "hypemarl/hypernet.hpp"

#include <cmath>
#include <string>

#include "hypemarl/error.hpp"

namespace hypemarl {

SystemParams::SystemParams(Vector v)
    : values(std::move(v)),
      lower(Vector::Constant(values.size(), -std::numeric_limits<double>::infinity())),
      upper(Vector::Constant(values.size(), std::numeric_limits<double>::infinity())) {}

SystemParams::SystemParams(Vector v, Vector lo, Vector hi)
    : values(std::move(v)), lower(std::move(lo)), upper(std::move(hi)) {
  validate();
}

void SystemParams::validate() const {
  if (lower.size() != values.size() || upper.size() != values.size()) {
    throw ConfigError("SystemParams: bounds do not match parameter count");
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!(values[i] >= lower[i] && values[i] <= upper[i])) {
      throw ConfigError("SystemParams: component " + std::to_string(i) + " = " +
                        std::to_string(values[i]) + " outside [" + std::to_string(lower[i]) +
                        ", " + std::to_string(upper[i]) + "]");
    }
  }
}

MlpSpec HyperSpec::network() const {
  MlpSpec net;
  net.input_dim = input_dim();
  net.hidden_dims = hidden_dims;
  net.output_dim = output_dim();
  net.hidden_activation = Activation::relu;
  net.output_activation = Activation::identity;
  return net;
}

void HyperSpec::validate() const {
  encoding.validate();
  target.validate();
  network().validate();
}

WeightVector hyper_forward(const HyperSpec& spec, const WeightVector& hyper_theta,
                           const Vector& encoding, const SystemParams& mu) {
  if (static_cast<std::size_t>(encoding.size()) != spec.encoding.dim) {
    throw ConfigError("hyper_forward: encoding has " + std::to_string(encoding.size()) +
                      " entries, expected " + std::to_string(spec.encoding.dim));
  }
  if (mu.size() != spec.param_dim) {
    throw ConfigError("hyper_forward: expected " + std::to_string(spec.param_dim) +
                      " system parameters, got " + std::to_string(mu.size()));
  }
  mu.validate();
  Vector z(static_cast<Eigen::Index>(spec.input_dim()));
  z << encoding, mu.values;
  Vector emitted = mlp_forward(spec.network(), hyper_theta, z);
  return WeightVector(spec.target, std::move(emitted));
}

WeightVector hyper_init(const HyperSpec& spec, Rng& rng) {
  spec.validate();
  const MlpSpec net = spec.network();
  Vector theta = glorot_init(net, rng);
  const auto slices = layer_slices(net);
  const LayerSlice& head = slices.back();

  // Mean squared norm of the last hidden layer over random conditions.
  constexpr int kCalibration = 64;
  Matrix z(static_cast<Eigen::Index>(spec.input_dim()), kCalibration);
  for (int s = 0; s < kCalibration; ++s) {
    const double p = std::floor(rng.uniform(0.0, 4096.0));
    z.col(s).head(static_cast<Eigen::Index>(spec.encoding.dim)) = positional_encoding(p, spec.encoding);
    for (std::size_t k = 0; k < spec.param_dim; ++k) {
      z(static_cast<Eigen::Index>(spec.encoding.dim + k), s) = rng.uniform(-1.0, 1.0);
    }
  }
  Matrix h = z;
  for (std::size_t l = 0; l + 1 < slices.size(); ++l) {
    h = activate(dense_forward(theta, slices[l].weight_offset, slices[l].fan_out, slices[l].fan_in, h),
                 Activation::relu);
  }
  const double mean_sq_norm = std::max(h.colwise().squaredNorm().mean(), 1e-12);

  // Row r of the head emits target parameter r.
  std::vector<double> row_std(spec.output_dim(), 0.0);
  for (const LayerSlice& t : layer_slices(spec.target)) {
    const double glorot_std = std::sqrt(2.0 / static_cast<double>(t.fan_in + t.fan_out));
    for (std::size_t k = 0; k < t.fan_in * t.fan_out; ++k) row_std[t.weight_offset + k] = glorot_std;
  }
  for (std::size_t r = 0; r < head.fan_out; ++r) {
    const double limit = std::sqrt(3.0) * row_std[r] / std::sqrt(mean_sq_norm);
    for (std::size_t c = 0; c < head.fan_in; ++c) {
      theta[static_cast<Eigen::Index>(head.weight_offset + r * head.fan_in + c)] =
          limit > 0.0 ? rng.uniform(-limit, limit) : 0.0;
    }
  }
  return WeightVector(net, std::move(theta));
}

Vector policy_act(const WeightVector& policy_theta, const Vector& local_state,
                  const ActionBounds& bounds) {
  const Vector out = mlp_forward(policy_theta.spec, policy_theta, local_state);
  return (bounds.center() + bounds.half_width() * out.array()).matrix();
}

double value_eval(const WeightVector& critic_theta, const Vector& local_state, const Vector& action) {
  Vector x(local_state.size() + action.size());
  x << local_state, action;
  return mlp_forward(critic_theta.spec, critic_theta, x)[0];
}

PlainNet::PlainNet(MlpSpec spec, std::size_t condition_dim)
    : spec_(std::move(spec)), condition_dim_(condition_dim) {
  spec_.validate();
  if (spec_.input_dim <= condition_dim_) {
    throw ConfigError("PlainNet: input_dim must exceed the condition dimension");
  }
}

Vector PlainNet::init(Rng& rng) const { return glorot_init(spec_, rng); }

ad::Var PlainNet::apply(ad::Tape& tape, ad::Var theta, ad::Var input, ad::Var condition) const {
  ad::Var x = condition_dim_ == 0 ? input : tape.concat_rows({input, condition});
  return mlp_apply(tape, spec_, theta, x);
}

Matrix PlainNet::evaluate(const Vector& theta, const Matrix& input, const Matrix& condition) const {
  if (condition_dim_ == 0) return mlp_forward_batch(spec_, theta, input);
  Matrix x(input.rows() + condition.rows(), input.cols());
  x << input, condition;
  return mlp_forward_batch(spec_, theta, x);
}

std::function<Matrix(const Matrix&)> PlainNet::bind(const Vector& theta,
                                                     const Matrix& condition) const {
  return [this, theta, condition](const Matrix& input) { return evaluate(theta, input, condition); };
}

HyperNet::HyperNet(HyperSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

Vector HyperNet::init(Rng& rng) const { return hyper_init(spec_, rng).values; }

ad::Var HyperNet::apply(ad::Tape& tape, ad::Var theta, ad::Var input, ad::Var condition) const {
  ad::Var emitted = mlp_apply(tape, spec_.network(), theta, condition);
  return mlp_apply(tape, spec_.target, emitted, input);
}

Matrix HyperNet::emit(const Vector& theta, const Matrix& condition) const {
  return mlp_forward_batch(spec_.network(), theta, condition);
}

Matrix HyperNet::evaluate(const Vector& theta, const Matrix& input, const Matrix& condition) const {
  return mlp_forward_batch(spec_.target, emit(theta, condition), input);
}

std::function<Matrix(const Matrix&)> HyperNet::bind(const Vector& theta,
                                                     const Matrix& condition) const {
  Matrix emitted = emit(theta, condition);
  return [this, emitted = std::move(emitted)](const Matrix& input) {
    return mlp_forward_batch(spec_.target, emitted, input);
  };
}

}  // namespace hypemarl
