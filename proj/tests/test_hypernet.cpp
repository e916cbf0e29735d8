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
#include <gtest/gtest.h>

#include <cmath>

#include "hypemarl/error.hpp"
#include "hypemarl/hypernet.hpp"
#include "hypemarl/optim.hpp"

namespace hypemarl {
namespace {

HyperSpec policy_spec() {
  HyperSpec s;
  s.param_dim = 2;
  s.target = MlpSpec{1, {256}, 1, Activation::relu, Activation::tanh};
  return s;
}

SystemParams mu_of(double a, double b) { return SystemParams((Vector(2) << a, b).finished()); }

TEST(HyperForward, ZeroWeightsEmitZeroPolicy) {
  const HyperSpec spec = policy_spec();
  const WeightVector h = WeightVector::zeros(spec.network());
  const WeightVector emitted =
      hyper_forward(spec, h, positional_encoding(12.0, spec.encoding), mu_of(0.3, -0.2));
  EXPECT_EQ(emitted.values, Vector::Zero(769));
  const ActionBounds bounds{-5.0, 5.0};
  EXPECT_EQ(policy_act(emitted, Vector::Constant(1, 2.0), bounds)[0], 0.0);
}

TEST(HyperForward, EmittedLength) {
  const HyperSpec spec = policy_spec();
  EXPECT_EQ(spec.output_dim(), 769u);
  EXPECT_EQ(spec.input_dim(), 2050u);
  Rng rng(1);
  const WeightVector h = hyper_init(spec, rng);
  EXPECT_EQ(static_cast<std::size_t>(h.values.size()), parameter_count(spec.network()));
  const WeightVector e = hyper_forward(spec, h, positional_encoding(3.0, spec.encoding), mu_of(0.1, 0.1));
  EXPECT_EQ(e.values.size(), 769);
  EXPECT_EQ(e.spec, spec.target);
}

TEST(HyperForward, SharedInputsGiveIdenticalWeights) {
  const HyperSpec spec = policy_spec();
  Rng rng(7);
  const WeightVector h = hyper_init(spec, rng);
  const Vector pe = positional_encoding(40.0, spec.encoding);
  const WeightVector a = hyper_forward(spec, h, pe, mu_of(0.5, 0.25));
  const WeightVector b = hyper_forward(spec, h, pe, mu_of(0.5, 0.25));
  EXPECT_EQ(a.values, b.values);
}

TEST(HyperForward, BatchEmitMatchesSingle) {
  const HyperSpec spec = policy_spec();
  Rng rng(8);
  const HyperNet net(spec);
  const Vector theta = net.init(rng);
  Matrix cond(2050, 3);
  for (int k = 0; k < 3; ++k) {
    cond.col(k) << positional_encoding(5.0 * k, spec.encoding), 0.1 * k, -0.2;
  }
  const Matrix emitted = net.emit(theta, cond);
  for (int k = 0; k < 3; ++k) {
    const WeightVector single = hyper_forward(spec, WeightVector(spec.network(), theta),
                                              positional_encoding(5.0 * k, spec.encoding),
                                              mu_of(0.1 * k, -0.2));
    EXPECT_LT((single.values - emitted.col(k)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(HyperForward, RejectsMismatchedInputs) {
  const HyperSpec spec = policy_spec();
  const WeightVector h = WeightVector::zeros(spec.network());
  EXPECT_THROW(hyper_forward(spec, h, Vector::Zero(10), mu_of(0, 0)), ConfigError);
  EXPECT_THROW(hyper_forward(spec, h, positional_encoding(0.0, spec.encoding),
                             SystemParams(Vector::Zero(3))),
               ConfigError);
}

TEST(HyperInit, EmittedScaleMatchesGlorot) {
  const HyperSpec spec = policy_spec();
  Rng rng(42);
  const WeightVector h = hyper_init(spec, rng);
  const auto slices = layer_slices(spec.target);
  std::vector<double> sum_sq(slices.size(), 0.0), bias_sum(slices.size(), 0.0);
  std::vector<double> count(slices.size(), 0.0), bias_count(slices.size(), 0.0);
  for (int s = 0; s < 100; ++s) {
    const double p = std::floor(rng.uniform(0.0, 1089.0));
    const WeightVector e = hyper_forward(spec, h, positional_encoding(p, spec.encoding),
                                         mu_of(rng.uniform(0.0, 0.75), rng.uniform(-0.75, 0.75)));
    for (std::size_t l = 0; l < slices.size(); ++l) {
      for (std::size_t k = 0; k < slices[l].fan_in * slices[l].fan_out; ++k) {
        const double w = e.values[static_cast<Eigen::Index>(slices[l].weight_offset + k)];
        sum_sq[l] += w * w;
        count[l] += 1.0;
      }
      for (std::size_t k = 0; k < slices[l].fan_out; ++k) {
        bias_sum[l] += e.values[static_cast<Eigen::Index>(slices[l].bias_offset + k)];
        bias_count[l] += 1.0;
      }
    }
  }
  for (std::size_t l = 0; l < slices.size(); ++l) {
    const double glorot = std::sqrt(2.0 / static_cast<double>(slices[l].fan_in + slices[l].fan_out));
    const double measured = std::sqrt(sum_sq[l] / count[l]);
    EXPECT_GE(measured, 0.5 * glorot) << "layer " << l;
    EXPECT_LE(measured, 2.0 * glorot) << "layer " << l;
    EXPECT_LT(std::abs(bias_sum[l] / bias_count[l]), 0.05) << "layer " << l;
  }
}

TEST(PolicyAct, ZeroWeightsGiveMidpoint) {
  const MlpSpec spec{1, {256}, 1, Activation::relu, Activation::tanh};
  const WeightVector zero = WeightVector::zeros(spec);
  EXPECT_EQ(policy_act(zero, Vector::Constant(1, 1.0), ActionBounds{-5.0, 5.0})[0], 0.0);
  EXPECT_DOUBLE_EQ(policy_act(zero, Vector::Constant(1, 1.0), ActionBounds{0.0, 4.0})[0], 2.0);
}

TEST(PolicyAct, RespectsBounds) {
  const MlpSpec spec{1, {256}, 1, Activation::relu, Activation::tanh};
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Vector theta = glorot_init(spec, rng) * 20.0;
    const WeightVector w(spec, theta);
    const Vector y = Vector::Constant(1, rng.uniform(-4.0, 4.0));
    const double u = policy_act(w, y, ActionBounds{-5.0, 5.0})[0];
    EXPECT_LE(std::abs(u), 5.0);
    EXPECT_EQ(u, policy_act(w, y, ActionBounds{-5.0, 5.0})[0]);
  }
}

TEST(ValueEval, ZeroWeightsGiveZero) {
  const MlpSpec spec{2, {256}, 1, Activation::relu, Activation::identity};
  EXPECT_EQ(value_eval(WeightVector::zeros(spec), Vector::Ones(1), Vector::Ones(1)), 0.0);
}

TEST(ValueEval, ActionDerivativeMatchesFiniteDifference) {
  const MlpSpec spec{2, {32}, 1, Activation::tanh, Activation::identity};
  Rng rng(4);
  const WeightVector w(spec, glorot_init(spec, rng));
  const Vector y = Vector::Constant(1, 0.4);
  const double u = 0.3;
  ad::Tape tape;
  ad::Var th = tape.constant(w.values);
  ad::Var x = tape.variable((Matrix(2, 1) << y[0], u).finished());
  ad::Var q = mlp_apply(tape, spec, th, x);
  tape.backward(q);
  const double analytic = tape.grad(x)(1, 0);
  const double h = 1e-5;
  const double fd = (value_eval(w, y, Vector::Constant(1, u + h)) -
                     value_eval(w, y, Vector::Constant(1, u - h))) /
                    (2.0 * h);
  EXPECT_LT(std::abs(analytic - fd) / std::max(std::abs(fd), 1e-6), 1e-5);
  EXPECT_EQ(value_eval(w, y, Vector::Constant(1, u)), value_eval(w, y, Vector::Constant(1, u)));
}

TEST(ConditionedNets, BindMatchesEvaluate) {
  Rng rng(10);
  const HyperNet hyper(policy_spec());
  const PlainNet plain(MlpSpec{3, {16}, 1, Activation::relu, Activation::tanh}, 2);
  for (const ConditionedNet* net : std::initializer_list<const ConditionedNet*>{&hyper, &plain}) {
    const Vector theta = net->init(rng);
    Matrix cond = Matrix::Random(static_cast<Eigen::Index>(net->condition_dim()), 4);
    const Matrix x = Matrix::Random(1, 4);
    const auto bound = net->bind(theta, cond);
    EXPECT_LT((bound(x) - net->evaluate(theta, x, cond)).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(ConditionedNets, TapeMatchesEvaluate) {
  Rng rng(12);
  const HyperNet net(policy_spec());
  const Vector theta = net.init(rng);
  Matrix cond(2050, 2);
  cond.col(0) << positional_encoding(1.0, EncodingConfig{}), 0.2, 0.1;
  cond.col(1) << positional_encoding(100.0, EncodingConfig{}), 0.6, -0.4;
  const Matrix x = (Matrix(1, 2) << 0.5, 2.5).finished();
  ad::Tape tape;
  ad::Var out = net.apply(tape, tape.constant(theta), tape.constant(x), tape.constant(cond));
  EXPECT_LT((tape.value(out) - net.evaluate(theta, x, cond)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ConditionedNets, HyperGradientMatchesFiniteDifferences) {
  Rng rng(13);
  HyperSpec spec;
  spec.encoding = EncodingConfig{32, 100.0};
  spec.param_dim = 2;
  spec.hidden_dims = {16};
  spec.target = MlpSpec{2, {8}, 1, Activation::tanh, Activation::identity};
  const HyperNet net(spec);
  Matrix cond(34, 3);
  for (int k = 0; k < 3; ++k) cond.col(k) << positional_encoding(3.0 * k, spec.encoding), 0.3, -0.1 * k;
  const Matrix x = Matrix::Random(2, 3);
  DifferentiableFn f = [&](const Vector& theta, Vector* grad) {
    ad::Tape tape;
    ad::Var th = tape.variable(theta);
    ad::Var s = tape.sum(net.apply(tape, th, tape.constant(x), tape.constant(cond)));
    const double v = tape.value(s)(0, 0);
    if (grad) {
      tape.backward(s);
      *grad = tape.grad(th);
    }
    return v;
  };
  EXPECT_LT(grad_check(f, net.init(rng), 50, 1e-5, rng), 1e-5);
}

TEST(SystemParams, BoundsValidated) {
  const Vector v = (Vector(2) << 0.5, 2.0).finished();
  const Vector lo = Vector::Zero(2), hi = Vector::Ones(2);
  EXPECT_THROW(SystemParams(v, lo, hi).validate(), ConfigError);
  EXPECT_NO_THROW(SystemParams(Vector::Constant(2, 0.5), lo, hi).validate());
}

TEST(ActionBounds, Clip) {
  const ActionBounds b{-5.0, 5.0};
  EXPECT_EQ(b.clip(7.0), 5.0);
  EXPECT_EQ(b.clip(-7.0), -5.0);
  EXPECT_EQ(b.clip(1.5), 1.5);
  EXPECT_EQ(b.half_width(), 5.0);
  EXPECT_EQ(b.center(), 0.0);
}

}  // namespace
}  // namespace hypemarl
