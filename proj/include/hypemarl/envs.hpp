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

#include <Eigen/Sparse>

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "hypemarl/hypernet.hpp"
#include "hypemarl/rng.hpp"

namespace hypemarl {

/// Uniform node-centred grid on (-1, 1)^2 including the boundary nodes.
/// Columns run along x1, rows along x2; node index = row * cols + col.
class Grid2D {
 public:
  Grid2D(std::size_t rows = 33, std::size_t cols = 33);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }
  std::size_t index(std::size_t row, std::size_t col) const { return row * cols_ + col; }
  double hx() const { return 2.0 / static_cast<double>(cols_ - 1); }
  double hy() const { return 2.0 / static_cast<double>(rows_ - 1); }
  double x1(std::size_t col) const { return -1.0 + hx() * static_cast<double>(col); }
  double x2(std::size_t row) const { return -1.0 + hy() * static_cast<double>(row); }
  /// Control-volume area of every node (trapezoid weights).
  Vector cell_areas() const;
  /// Mirror about x1 = 0 (column reversal).
  Vector mirror_x1(const Vector& field) const;
  /// Mirror about x2 = 0 (row reversal).
  Vector mirror_x2(const Vector& field) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
};

/// Trapezoid-rule integral of a nodal field.
double mass(const Grid2D& grid, const Vector& field);

enum class EnvKind { vacuum, fluid };

EnvKind env_kind_from_string(const std::string& name);
const char* to_string(EnvKind kind);

struct Box2 {
  double lo1, hi1, lo2, hi2;
};

struct EnvParams {
  double kappa = 0.001;
  double dt = 0.1;
  double final_time = 1.0;
  ActionBounds action{-5.0, 5.0};
  Box2 mu0_box{-0.75, 0.0, -0.75, 0.75};
  Box2 target_box{0.0, 0.75, -0.75, 0.75};
  double alpha_lo = -1.0;
  double alpha_hi = 1.0;

  static EnvParams vacuum();
  static EnvParams fluid();

  std::size_t steps() const;
  void validate() const;
};

struct FieldState {
  Vector y;
  std::size_t t = 0;
};

/// Everything sampled per episode. Only the target centre (and the angle of
/// attack for the fluid case) is exposed to agents as mu.
struct EpisodeParams {
  Eigen::Vector2d mu0 = Eigen::Vector2d::Zero();
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
  std::optional<double> alpha;
};

/// (10 / pi) exp(-10 |x - centre|^2) at every node.
FieldState gaussian_density(const Eigen::Vector2d& centre, const Grid2D& grid);
FieldState initial_density(const Eigen::Vector2d& mu0, const Grid2D& grid);
FieldState target_density(const Eigen::Vector2d& target, const Grid2D& grid);

/// -(y - y_target)^2.
double local_reward(double y, double y_target);

/// Stream function of the analytic transport field:
/// psi = -cos(a) x1 - sin(a) x2 (1 - x1^2), v = (d psi / d x2, -d psi / d x1).
double stream_function(double alpha, double x1, double x2);

/// Nodal velocities (2 x N): v1 = -sin(a)(1 - x1^2), v2 = cos(a) - 2 sin(a) x1 x2.
Matrix velocity_field(double alpha, const Grid2D& grid);

/// Max |div v| over interior nodes using central differences.
double max_interior_divergence(const Matrix& velocity, const Grid2D& grid);

/// Implicit-Euler operator of dy/dt + div(-kappa grad y + v y) = u on a
/// finite-volume discretization with zero total flux through the walls.
///
/// Without transport the system (A + dt kappa K) y' = A (y + dt u) is SPD
/// (A: cell areas, K: symmetric five-point stiffness) and solved by
/// conjugate gradients. Upwinded transport makes it non-symmetric; then
/// BiCGSTAB is used. Both operators have zero column sums, so the discrete
/// mass changes exactly by dt * mass(u) up to the solver residual.
class TransportOperator {
 public:
  TransportOperator(const Grid2D& grid, const EnvParams& params,
                    std::optional<double> alpha = std::nullopt);

  Vector step(const Vector& y, const Vector& u) const;
  const Eigen::SparseMatrix<double>& system() const { return system_; }
  int last_iterations() const { return last_iterations_; }

  static constexpr double kTolerance = 1e-13;
  static constexpr int kMaxIterations = 2000;

 private:
  Grid2D grid_;
  EnvParams params_;
  bool symmetric_;
  Vector areas_;
  Eigen::SparseMatrix<double> system_;
  mutable int last_iterations_ = 0;
};

FieldState fp_vacuum_step(const FieldState& y, const Vector& u, const Grid2D& grid,
                          const EnvParams& params);
FieldState fp_fluid_step(const FieldState& y, const Vector& u, double alpha, const Grid2D& grid,
                         const EnvParams& params);

EpisodeParams sample_params(EnvKind kind, const EnvParams& params, Rng& rng);

/// Scalar test dynamics y' = y + u with actions in [-1, 1].
double toy_step(double y, double u);
double toy_reward(double y_next, double y_target);
/// Best single-step action towards the target.
double toy_optimal_action(double y, double y_target);

/// Distributed density-control environment: one agent per node, scalar
/// local state and action.
class DensityEnv {
 public:
  DensityEnv(EnvKind kind, Grid2D grid, EnvParams params);

  EnvKind kind() const { return kind_; }
  const Grid2D& grid() const { return grid_; }
  const EnvParams& params() const { return params_; }
  std::size_t agents() const { return grid_.size(); }
  std::size_t param_dim() const { return kind_ == EnvKind::vacuum ? 2 : 3; }
  std::size_t steps() const { return params_.steps(); }

  EpisodeParams sample(Rng& rng) const { return sample_params(kind_, params_, rng); }
  /// mu exposed to agents, with its sampling box as bounds.
  SystemParams system_params(const EpisodeParams& ep) const;

  struct Episode {
    EpisodeParams params;
    SystemParams mu;
    FieldState state;
    Vector target;
    std::shared_ptr<const TransportOperator> op;
  };

  Episode reset(const EpisodeParams& ep) const;
  /// Advances the episode state in place and returns per-agent rewards of
  /// the new state.
  Vector step(Episode& episode, const Vector& u) const;

 private:
  EnvKind kind_;
  Grid2D grid_;
  EnvParams params_;
  std::shared_ptr<const TransportOperator> vacuum_op_;
};

/// Writes `node_index,x1,x2,y` CSV plus a JSON sidecar (same stem) with the
/// time, mu and grid dimensions.
void export_snapshot(const std::filesystem::path& csv_path, const Grid2D& grid,
                     const FieldState& state, double time, const SystemParams& mu);

}  // namespace hypemarl
