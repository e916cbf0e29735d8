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
#include "hypemarl/envs.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <nlohmann/json.hpp>

#include "hypemarl/error.hpp"

namespace hypemarl {

Grid2D::Grid2D(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  if (rows < 2 || cols < 2) throw ConfigError("grid needs at least 2 x 2 nodes");
}

Vector Grid2D::cell_areas() const {
  Vector a(static_cast<Eigen::Index>(size()));
  for (std::size_t r = 0; r < rows_; ++r) {
    const double wy = (r == 0 || r + 1 == rows_) ? 0.5 : 1.0;
    for (std::size_t c = 0; c < cols_; ++c) {
      const double wx = (c == 0 || c + 1 == cols_) ? 0.5 : 1.0;
      a[static_cast<Eigen::Index>(index(r, c))] = hx() * hy() * wx * wy;
    }
  }
  return a;
}

Vector Grid2D::mirror_x1(const Vector& field) const {
  Vector out(field.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) {
      out[static_cast<Eigen::Index>(index(r, cols_ - 1 - c))] = field[static_cast<Eigen::Index>(index(r, c))];
    }
  }
  return out;
}

Vector Grid2D::mirror_x2(const Vector& field) const {
  Vector out(field.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) {
      out[static_cast<Eigen::Index>(index(rows_ - 1 - r, c))] = field[static_cast<Eigen::Index>(index(r, c))];
    }
  }
  return out;
}

double mass(const Grid2D& grid, const Vector& field) {
  if (static_cast<std::size_t>(field.size()) != grid.size()) throw ConfigError("mass: field size mismatch");
  return grid.cell_areas().dot(field);
}

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "vacuum") return EnvKind::vacuum;
  if (name == "fluid") return EnvKind::fluid;
  throw ConfigError("unknown environment '" + name + "' (expected vacuum|fluid)");
}

const char* to_string(EnvKind kind) { return kind == EnvKind::vacuum ? "vacuum" : "fluid"; }

EnvParams EnvParams::vacuum() { return EnvParams{}; }

EnvParams EnvParams::fluid() {
  EnvParams p;
  p.mu0_box = {-0.75, -0.25, -0.75, 0.75};
  p.target_box = {0.25, 0.75, -0.75, 0.75};
  return p;
}

std::size_t EnvParams::steps() const {
  return static_cast<std::size_t>(std::llround(final_time / dt));
}

void EnvParams::validate() const {
  if (!(kappa >= 0.0)) throw ConfigError("env.kappa must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("env.dt must be > 0");
  if (!(final_time >= dt)) throw ConfigError("env.final_time must be >= env.dt");
  if (!(action.high > action.low)) throw ConfigError("env action bounds are empty");
  for (const Box2& b : {mu0_box, target_box}) {
    if (!(b.lo1 <= b.hi1 && b.lo2 <= b.hi2)) throw ConfigError("env sampling box is empty");
    if (b.lo1 < -1.0 || b.hi1 > 1.0 || b.lo2 < -1.0 || b.hi2 > 1.0) {
      throw ConfigError("env sampling box leaves the domain (-1, 1)^2");
    }
  }
  if (!(alpha_lo <= alpha_hi)) throw ConfigError("env alpha range is empty");
}

FieldState gaussian_density(const Eigen::Vector2d& centre, const Grid2D& grid) {
  FieldState s;
  s.y.resize(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const double d1 = grid.x1(c) - centre[0];
      const double d2 = grid.x2(r) - centre[1];
      s.y[static_cast<Eigen::Index>(grid.index(r, c))] =
          10.0 / std::numbers::pi * std::exp(-10.0 * d1 * d1 - 10.0 * d2 * d2);
    }
  }
  return s;
}

FieldState initial_density(const Eigen::Vector2d& mu0, const Grid2D& grid) {
  return gaussian_density(mu0, grid);
}

FieldState target_density(const Eigen::Vector2d& target, const Grid2D& grid) {
  return gaussian_density(target, grid);
}

double local_reward(double y, double y_target) {
  const double d = y - y_target;
  return -d * d;
}

double stream_function(double alpha, double x1, double x2) {
  return -std::cos(alpha) * x1 - std::sin(alpha) * x2 * (1.0 - x1 * x1);
}

Matrix velocity_field(double alpha, const Grid2D& grid) {
  Matrix v(2, static_cast<Eigen::Index>(grid.size()));
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const double x1 = grid.x1(c), x2 = grid.x2(r);
      const auto i = static_cast<Eigen::Index>(grid.index(r, c));
      v(0, i) = -std::sin(alpha) * (1.0 - x1 * x1);
      v(1, i) = std::cos(alpha) - 2.0 * std::sin(alpha) * x1 * x2;
    }
  }
  return v;
}

double max_interior_divergence(const Matrix& velocity, const Grid2D& grid) {
  double worst = 0.0;
  for (std::size_t r = 1; r + 1 < grid.rows(); ++r) {
    for (std::size_t c = 1; c + 1 < grid.cols(); ++c) {
      const auto e = static_cast<Eigen::Index>(grid.index(r, c + 1));
      const auto w = static_cast<Eigen::Index>(grid.index(r, c - 1));
      const auto n = static_cast<Eigen::Index>(grid.index(r + 1, c));
      const auto s = static_cast<Eigen::Index>(grid.index(r - 1, c));
      const double div = (velocity(0, e) - velocity(0, w)) / (2.0 * grid.hx()) +
                         (velocity(1, n) - velocity(1, s)) / (2.0 * grid.hy());
      worst = std::max(worst, std::abs(div));
    }
  }
  return worst;
}

TransportOperator::TransportOperator(const Grid2D& grid, const EnvParams& params,
                                     std::optional<double> alpha)
    : grid_(grid), params_(params), symmetric_(!alpha.has_value()), areas_(grid.cell_areas()) {
  params_.validate();
  const std::size_t rows = grid.rows(), cols = grid.cols();
  const double hx = grid.hx(), hy = grid.hy();
  const double dt = params.dt, kappa = params.kappa;
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    entries.emplace_back(static_cast<int>(i), static_cast<int>(i), areas_[static_cast<Eigen::Index>(i)]);
  }
  // Face between nodes i and j with diffusive coefficient and volumetric
  // flux phi from i to j.
  auto add_face = [&](std::size_t i, std::size_t j, double coef, double phi) {
    const int a = static_cast<int>(i), b = static_cast<int>(j);
    entries.emplace_back(a, a, dt * coef);
    entries.emplace_back(b, b, dt * coef);
    entries.emplace_back(a, b, -dt * coef);
    entries.emplace_back(b, a, -dt * coef);
    if (phi > 0.0) {
      entries.emplace_back(a, a, dt * phi);
      entries.emplace_back(b, a, -dt * phi);
    } else if (phi < 0.0) {
      entries.emplace_back(b, b, -dt * phi);
      entries.emplace_back(a, b, dt * phi);
    }
  };
  auto clip = [](double x) { return std::clamp(x, -1.0, 1.0); };
  for (std::size_t r = 0; r < rows; ++r) {
    const double wy = (r == 0 || r + 1 == rows) ? 0.5 : 1.0;
    for (std::size_t c = 0; c + 1 < cols; ++c) {
      const double xf = grid.x1(c) + 0.5 * hx;
      const double lo = clip(grid.x2(r) - 0.5 * hy), hi = clip(grid.x2(r) + 0.5 * hy);
      const double phi = alpha ? stream_function(*alpha, xf, hi) - stream_function(*alpha, xf, lo) : 0.0;
      add_face(grid.index(r, c), grid.index(r, c + 1), kappa * hy * wy / hx, phi);
    }
  }
  for (std::size_t r = 0; r + 1 < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double wx = (c == 0 || c + 1 == cols) ? 0.5 : 1.0;
      const double yf = grid.x2(r) + 0.5 * hy;
      const double lo = clip(grid.x1(c) - 0.5 * hx), hi = clip(grid.x1(c) + 0.5 * hx);
      const double phi = alpha ? stream_function(*alpha, lo, yf) - stream_function(*alpha, hi, yf) : 0.0;
      add_face(grid.index(r, c), grid.index(r + 1, c), kappa * hx * wx / hy, phi);
    }
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  system_.resize(n, n);
  system_.setFromTriplets(entries.begin(), entries.end());
  system_.makeCompressed();
}

Vector TransportOperator::step(const Vector& y, const Vector& u) const {
  const auto n = static_cast<Eigen::Index>(grid_.size());
  if (y.size() != n || u.size() != n) throw ConfigError("transport step: field size mismatch");
  const Vector rhs = areas_.cwiseProduct(y + params_.dt * u);
  Vector next;
  if (symmetric_) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(kTolerance);
    cg.setMaxIterations(kMaxIterations);
    cg.compute(system_);
    next = cg.solveWithGuess(rhs, y);
    last_iterations_ = static_cast<int>(cg.iterations());
    if (cg.info() != Eigen::Success) {
      throw NumericalError("conjugate gradients did not converge (residual " +
                           std::to_string(cg.error()) + " after " +
                           std::to_string(cg.iterations()) + " iterations)");
    }
  } else {
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>> solver;
    solver.setTolerance(kTolerance);
    solver.setMaxIterations(kMaxIterations);
    solver.compute(system_);
    next = solver.solveWithGuess(rhs, y);
    last_iterations_ = static_cast<int>(solver.iterations());
    if (solver.info() != Eigen::Success) {
      throw NumericalError("BiCGSTAB did not converge (residual " + std::to_string(solver.error()) +
                           " after " + std::to_string(solver.iterations()) + " iterations)");
    }
  }
  return next;
}

namespace {

void check_actions(const Vector& u, const ActionBounds& bounds) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!(u[i] >= bounds.low - 1e-12 && u[i] <= bounds.high + 1e-12)) {
      throw UsageError("control " + std::to_string(i) + " = " + std::to_string(u[i]) +
                       " outside the action bounds");
    }
  }
}

}  // namespace

FieldState fp_vacuum_step(const FieldState& y, const Vector& u, const Grid2D& grid,
                          const EnvParams& params) {
  check_actions(u, params.action);
  TransportOperator op(grid, params);
  return FieldState{op.step(y.y, u), y.t + 1};
}

FieldState fp_fluid_step(const FieldState& y, const Vector& u, double alpha, const Grid2D& grid,
                         const EnvParams& params) {
  check_actions(u, params.action);
  TransportOperator op(grid, params, alpha);
  return FieldState{op.step(y.y, u), y.t + 1};
}

EpisodeParams sample_params(EnvKind kind, const EnvParams& params, Rng& rng) {
  EpisodeParams ep;
  ep.mu0 = {rng.uniform(params.mu0_box.lo1, params.mu0_box.hi1),
            rng.uniform(params.mu0_box.lo2, params.mu0_box.hi2)};
  ep.target = {rng.uniform(params.target_box.lo1, params.target_box.hi1),
               rng.uniform(params.target_box.lo2, params.target_box.hi2)};
  if (kind == EnvKind::fluid) ep.alpha = rng.uniform(params.alpha_lo, params.alpha_hi);
  return ep;
}

double toy_step(double y, double u) { return y + u; }

double toy_reward(double y_next, double y_target) { return local_reward(y_next, y_target); }

double toy_optimal_action(double y, double y_target) {
  return std::clamp(y_target - y, -1.0, 1.0);
}

DensityEnv::DensityEnv(EnvKind kind, Grid2D grid, EnvParams params)
    : kind_(kind), grid_(grid), params_(params) {
  params_.validate();
  if (kind_ == EnvKind::vacuum) vacuum_op_ = std::make_shared<TransportOperator>(grid_, params_);
}

SystemParams DensityEnv::system_params(const EpisodeParams& ep) const {
  const Box2& b = params_.target_box;
  if (kind_ == EnvKind::vacuum) {
    return SystemParams(Eigen::Vector2d(ep.target), Eigen::Vector2d(b.lo1, b.lo2),
                        Eigen::Vector2d(b.hi1, b.hi2));
  }
  if (!ep.alpha) throw ConfigError("fluid episode without an angle of attack");
  return SystemParams(Eigen::Vector3d(ep.target[0], ep.target[1], *ep.alpha),
                      Eigen::Vector3d(b.lo1, b.lo2, params_.alpha_lo),
                      Eigen::Vector3d(b.hi1, b.hi2, params_.alpha_hi));
}

DensityEnv::Episode DensityEnv::reset(const EpisodeParams& ep) const {
  Episode e;
  e.params = ep;
  e.mu = system_params(ep);
  e.state = initial_density(ep.mu0, grid_);
  e.target = target_density(ep.target, grid_).y;
  e.op = kind_ == EnvKind::vacuum ? vacuum_op_
                                  : std::make_shared<TransportOperator>(grid_, params_, *ep.alpha);
  return e;
}

Vector DensityEnv::step(Episode& episode, const Vector& u) const {
  check_actions(u, params_.action);
  episode.state.y = episode.op->step(episode.state.y, u);
  ++episode.state.t;
  Vector rewards(episode.state.y.size());
  for (Eigen::Index i = 0; i < rewards.size(); ++i) {
    rewards[i] = local_reward(episode.state.y[i], episode.target[i]);
  }
  return rewards;
}

void export_snapshot(const std::filesystem::path& csv_path, const Grid2D& grid,
                     const FieldState& state, double time, const SystemParams& mu) {
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  csv << "node_index,x1,x2,y\n";
  char line[128];
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const std::size_t i = grid.index(r, c);
      std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", i, grid.x1(c), grid.x2(r),
                    state.y[static_cast<Eigen::Index>(i)]);
      csv << line;
    }
  }
  nlohmann::json side;
  side["t"] = time;
  side["step"] = state.t;
  side["mu"] = std::vector<double>(mu.values.data(), mu.values.data() + mu.values.size());
  side["grid"] = {{"rows", grid.rows()}, {"cols", grid.cols()}};
  std::filesystem::path json_path = csv_path;
  json_path.replace_extension(".json");
  std::ofstream js(json_path);
  if (!js) throw IoError("cannot write " + json_path.string());
  js << side.dump(2) << "\n";
}

}  // namespace hypemarl
