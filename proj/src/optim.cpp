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
#include "hypemarl/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hypemarl/error.hpp"

namespace hypemarl {

double huber(double residual, double delta) {
  const double a = std::abs(residual);
  return a <= delta ? 0.5 * residual * residual : delta * (a - 0.5 * delta);
}

void adam_step(Vector& theta, const Eigen::Ref<const Vector>& gradient, AdamState& state,
               double learning_rate) {
  if (gradient.size() != theta.size() || state.m.size() != theta.size() ||
      state.v.size() != theta.size()) {
    throw ConfigError("adam_step: shape mismatch");
  }
  if (!gradient.allFinite()) {
    for (Eigen::Index i = 0; i < gradient.size(); ++i) {
      if (!std::isfinite(gradient[i])) {
        throw TrainingError("non-finite gradient at index " + std::to_string(i));
      }
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  const double eps = state.epsilon;
  state.m.array() = b1 * state.m.array() + (1.0 - b1) * gradient.array();
  state.v.array() = b2 * state.v.array() + (1.0 - b2) * gradient.array().square();
  theta.array() -= (learning_rate / c1) * state.m.array() / ((state.v.array() * (1.0 / c2)).sqrt() + eps);
}

double grad_check(const DifferentiableFn& f, const Vector& theta, std::size_t probes, double h,
                  Rng& rng) {
  Vector analytic(theta.size());
  f(theta, &analytic);
  double worst = 0.0;
  Vector probe = theta;
  for (std::size_t k = 0; k < probes; ++k) {
    const auto i = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(theta.size())));
    probe[i] = theta[i] + h;
    const double up = f(probe, nullptr);
    probe[i] = theta[i] - h;
    const double down = f(probe, nullptr);
    probe[i] = theta[i];
    const double fd = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic[i]), std::abs(fd), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - fd) / scale);
  }
  return worst;
}

}  // namespace hypemarl
