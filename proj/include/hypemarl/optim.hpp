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

#include <cstdint>
#include <functional>

#include "hypemarl/autodiff.hpp"
#include "hypemarl/rng.hpp"

namespace hypemarl {

/// 0.5 r^2 inside |r| <= delta, linear with slope delta outside.
double huber(double residual, double delta);

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(Eigen::Index size) : m(Vector::Zero(size)), v(Vector::Zero(size)) {}
};

/// One bias-corrected Adam update applied in place. Throws TrainingError
/// naming the first non-finite gradient entry; theta and state are left
/// untouched in that case.
void adam_step(Vector& theta, const Eigen::Ref<const Vector>& gradient, AdamState& state,
               double learning_rate);

/// Scalar objective that also returns its reverse-mode gradient when
/// `gradient` is non-null.
using DifferentiableFn = std::function<double(const Vector& theta, Vector* gradient)>;

/// Largest relative error between the reverse-mode gradient and central
/// differences over `probes` randomly chosen coordinates. The relative error
/// of a coordinate is |g - fd| / max(|g|, |fd|, 1e-6), so coordinates where
/// both gradients vanish count as exact.
double grad_check(const DifferentiableFn& f, const Vector& theta, std::size_t probes, double h,
                  Rng& rng);

}  // namespace hypemarl
