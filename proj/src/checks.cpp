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

#include "hypemarl/checks.hpp"

#include <cmath>
#include <memory>

#include "hypemarl/envs.hpp"
#include "hypemarl/hypernet.hpp"
#include "hypemarl/optim.hpp"
#include "hypemarl/surrogate.hpp"
#include "hypemarl/td3.hpp"

namespace hypemarl {

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

/// Scalar w . net(theta; x, c) so every output contributes.
DifferentiableFn net_objective(const ConditionedNet& net, Matrix x, Matrix c, Matrix w) {
  return [&net, x = std::move(x), c = std::move(c), w = std::move(w)](const Vector& theta,
                                                                      Vector* grad) {
    ad::Tape tape;
    ad::Var th = tape.variable(theta);
    ad::Var out = net.apply(tape, th, tape.constant(x), tape.constant(c));
    ad::Var s = tape.sum(tape.mul(out, tape.constant(w)));
    const double value = tape.value(s)(0, 0);
    if (grad) {
      tape.backward(s);
      *grad = tape.grad(th);
    }
    return value;
  };
}

CheckResult grad_entry(const std::string& name, const ConditionedNet& net, std::size_t batch,
                       std::size_t probes, Rng& rng) {
  const auto b = static_cast<Eigen::Index>(batch);
  Matrix x = random_matrix(static_cast<Eigen::Index>(net.input_dim()), b, rng);
  Matrix c = random_matrix(static_cast<Eigen::Index>(net.condition_dim()), b, rng);
  Matrix w = random_matrix(static_cast<Eigen::Index>(net.output_dim()), b, rng);
  const Vector theta = net.init(rng);
  const double err = grad_check(net_objective(net, x, c, w), theta, probes, 1e-5, rng);
  return {name, err, 1e-5, err < 1e-5};
}

HyperSpec hyper_spec(std::size_t in, std::size_t out, Activation head) {
  HyperSpec s;
  s.encoding = EncodingConfig{};
  s.param_dim = 2;
  s.target = MlpSpec{in, {256}, out, Activation::relu, head};
  return s;
}

}  // namespace

std::vector<CheckResult> run_grad_checks(std::uint64_t seed, std::size_t probes) {
  Rng rng(seed);
  std::vector<CheckResult> out;
  const PlainNet actor(MlpSpec{3, {256, 256}, 1, Activation::relu, Activation::tanh}, 2);
  const PlainNet critic(MlpSpec{4, {256, 256}, 1, Activation::relu, Activation::identity}, 2);
  out.push_back(grad_entry("plain actor", actor, 8, probes, rng));
  out.push_back(grad_entry("plain critic", critic, 8, probes, rng));

  const HyperNet hyper_actor(hyper_spec(1, 1, Activation::tanh));
  const HyperNet hyper_critic(hyper_spec(2, 1, Activation::identity));
  // Conditions are [PE; mu] columns of real positions.
  for (const HyperNet* net : {&hyper_actor, &hyper_critic}) {
    const std::size_t batch = 4;
    Matrix x = random_matrix(static_cast<Eigen::Index>(net->input_dim()), batch, rng);
    Matrix c(static_cast<Eigen::Index>(net->condition_dim()), batch);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(batch); ++k) {
      c.col(k).head(2048) = positional_encoding(std::floor(rng.uniform(0.0, 1089.0)), EncodingConfig{});
      c(2048, k) = rng.uniform(0.0, 0.75);
      c(2049, k) = rng.uniform(-0.75, 0.75);
    }
    Matrix w = random_matrix(1, batch, rng);
    const Vector theta = net->init(rng);
    const double err = grad_check(net_objective(*net, x, c, w), theta, probes, 1e-5, rng);
    out.push_back({net == &hyper_actor ? "hypernet -> policy" : "hypernet -> critic", err, 1e-5,
                   err < 1e-5});
  }

  SurrogateModel model(1, 1, 2, SurrogateConfig{}, rng);
  // The surrogate MLP sees [y; u; mu]; u and mu travel as the condition.
  const PlainNet surrogate_net(model.spec(), 3);
  out.push_back(grad_entry("surrogate", surrogate_net, 16, probes, rng));
  return out;
}

ToyTd3Result run_toy_td3(std::uint64_t seed, std::size_t max_updates, double y_target,
                         double tolerance) {
  Rng rng(seed);
  const ActionBounds bounds{-1.0, 1.0};
  auto actor = std::make_shared<PlainNet>(MlpSpec{1, {64, 64}, 1, Activation::relu, Activation::tanh}, 0);
  auto critic = std::make_shared<PlainNet>(MlpSpec{2, {64, 64}, 1, Activation::relu, Activation::identity}, 0);
  Td3Hyper hyper;
  hyper.gamma = 0.5;
  hyper.batch_size = 64;
  hyper.actor_lr = 1e-3;
  hyper.critic_lr = 1e-3;
  hyper.target_noise = 0.1;
  hyper.noise_clip = 0.25;
  hyper.polyak = 0.01;
  Td3Learner learner(actor, critic, bounds, hyper, rng);

  constexpr std::size_t kCapacity = 20000;
  std::vector<double> ys, us, rs, next;
  auto add = [&](double y, double u) {
    const double y1 = toy_step(y, u);
    if (ys.size() == kCapacity) {
      const std::size_t slot = rng.index(kCapacity);
      ys[slot] = y, us[slot] = u, rs[slot] = toy_reward(y1, y_target), next[slot] = y1;
      return;
    }
    ys.push_back(y), us.push_back(u), rs.push_back(toy_reward(y1, y_target)), next.push_back(y1);
  };
  auto random_state = [&] { return y_target + rng.uniform(-3.0, 3.0); };
  for (int k = 0; k < 1000; ++k) add(random_state(), rng.uniform(-1.0, 1.0));

  Matrix probes(1, 100);
  for (int k = 0; k < 100; ++k) probes(0, k) = y_target - 2.0 + 4.0 * k / 99.0;
  auto error = [&] {
    const Matrix u = learner.act(probes, Matrix(0, 100));
    double sum = 0.0;
    for (int k = 0; k < 100; ++k) sum += std::abs(u(0, k) - toy_optimal_action(probes(0, k), y_target));
    return sum / 100.0;
  };

  ToyTd3Result out;
  const Eigen::Index b = static_cast<Eigen::Index>(hyper.batch_size);
  TransitionBatch batch;
  batch.state.resize(1, b);
  batch.action.resize(1, b);
  batch.next_state.resize(1, b);
  batch.reward.resize(b);
  batch.condition.resize(0, b);
  for (std::size_t step = 1; step <= max_updates; ++step) {
    const double y = random_state();
    const Matrix u = learner.act(Matrix::Constant(1, 1, y), Matrix(0, 1));
    add(y, explore(u, 0.3, bounds, rng)(0, 0));
    for (Eigen::Index j = 0; j < b; ++j) {
      const std::size_t i = rng.index(ys.size());
      batch.state(0, j) = ys[i];
      batch.action(0, j) = us[i];
      batch.reward[j] = rs[i];
      batch.next_state(0, j) = next[i];
    }
    learner.train_step(batch, rng);
    out.updates = step;
    if (step % 100 == 0) {
      out.mean_error = error();
      if (out.updates_to_tolerance == 0 && out.mean_error < tolerance) out.updates_to_tolerance = step;
    }
  }
  out.mean_error = error();
  return out;
}

std::vector<CheckResult> run_env_checks(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  Rng rng(seed);
  std::vector<CheckResult> out;
  const Grid2D grid(rows, cols);
  const EnvParams vac = EnvParams::vacuum();
  const EnvParams flu = EnvParams::fluid();
  const auto n = static_cast<Eigen::Index>(grid.size());
  auto random_field = [&](double scale) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.uniform(-1.0, 1.0);
    return v;
  };

  double mass_err = 0.0;
  FieldState y = initial_density(Eigen::Vector2d(-0.4, 0.2), grid);
  for (int t = 0; t < 10; ++t) {
    const Vector u = random_field(5.0);
    const FieldState next = fp_vacuum_step(y, u, grid, vac);
    mass_err = std::max(mass_err, std::abs(mass(grid, next.y) - mass(grid, y.y) - vac.dt * mass(grid, u)));
    y = next;
  }
  out.push_back({"vacuum mass identity", mass_err, 1e-10, mass_err <= 1e-10});

  FieldState flat{Vector::Constant(n, 0.7), 0};
  const double fixed = (fp_vacuum_step(flat, Vector::Zero(n), grid, vac).y - flat.y).cwiseAbs().maxCoeff();
  out.push_back({"constant fixed point", fixed, 1e-12, fixed <= 1e-12});

  const FieldState y0{random_field(3.0), 0};
  const Vector u0 = random_field(5.0);
  const double refl1 = (fp_vacuum_step(FieldState{grid.mirror_x1(y0.y), 0}, grid.mirror_x1(u0), grid, vac).y -
                        grid.mirror_x1(fp_vacuum_step(y0, u0, grid, vac).y))
                           .cwiseAbs()
                           .maxCoeff();
  const double refl2 = (fp_vacuum_step(FieldState{grid.mirror_x2(y0.y), 0}, grid.mirror_x2(u0), grid, vac).y -
                        grid.mirror_x2(fp_vacuum_step(y0, u0, grid, vac).y))
                           .cwiseAbs()
                           .maxCoeff();
  const double refl = std::max(refl1, refl2);
  out.push_back({"reflection equivariance", refl, 1e-10, refl <= 1e-10});

  double fluid_drift = 0.0;
  double divergence = 0.0;
  double mirror = 0.0;
  for (int k = 0; k < 5; ++k) {
    const double alpha = rng.uniform(-1.0, 1.0);
    FieldState z = initial_density(Eigen::Vector2d(rng.uniform(-0.75, -0.25), rng.uniform(-0.75, 0.75)), grid);
    for (int t = 0; t < 10; ++t) {
      const FieldState next = fp_fluid_step(z, Vector::Zero(n), alpha, grid, flu);
      fluid_drift = std::max(fluid_drift, std::abs(mass(grid, next.y) - mass(grid, z.y)));
      z = next;
    }
    divergence = std::max(divergence, max_interior_divergence(velocity_field(alpha, grid), grid));
    const Vector uf = random_field(5.0);
    const Vector a = fp_fluid_step(FieldState{grid.mirror_x1(z.y), 0}, grid.mirror_x1(uf), -alpha, grid, flu).y;
    const Vector b = grid.mirror_x1(fp_fluid_step(z, uf, alpha, grid, flu).y);
    mirror = std::max(mirror, (a - b).cwiseAbs().maxCoeff());
  }
  out.push_back({"fluid zero-flux mass drift", fluid_drift, 1e-8, fluid_drift <= 1e-8});
  out.push_back({"velocity divergence", divergence, 1e-10, divergence <= 1e-10});
  out.push_back({"fluid mirror equivariance", mirror, 1e-9, mirror <= 1e-9});

  // Variance over nodes must not grow under pure diffusion.
  double growth = 0.0;
  FieldState d{random_field(3.0), 0};
  for (int t = 0; t < 10; ++t) {
    const FieldState next = fp_vacuum_step(d, Vector::Zero(n), grid, vac);
    auto var = [](const Vector& v) { return (v.array() - v.mean()).square().mean(); };
    growth = std::max(growth, var(next.y) - var(d.y));
    d = next;
  }
  out.push_back({"diffusion variance growth", growth, 1e-14, growth <= 1e-14});
  return out;
}

}  // namespace hypemarl
