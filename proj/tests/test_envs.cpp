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
#include <filesystem>
#include <numbers>

#include "hypemarl/checks.hpp"
#include "hypemarl/envs.hpp"
#include "hypemarl/error.hpp"
#include "hypemarl/metrics.hpp"

namespace hypemarl {
namespace {

// Dense node-by-node assembly of the implicit diffusion step, solved by LU.
Vector dense_vacuum_oracle(const Vector& y, const Vector& u, const Grid2D& g, double kappa, double dt) {
  const auto n = static_cast<Eigen::Index>(g.size());
  const double hx = g.hx(), hy = g.hy();
  auto weight = [](std::size_t k, std::size_t count) { return (k == 0 || k + 1 == count) ? 0.5 : 1.0; };
  Matrix a = Matrix::Zero(n, n);
  Vector rhs(n);
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      const auto i = static_cast<Eigen::Index>(g.index(r, c));
      const double area = hx * hy * weight(r, g.rows()) * weight(c, g.cols());
      a(i, i) += area;
      rhs[i] = area * (y[i] + dt * u[i]);
      auto couple = [&](std::size_t rr, std::size_t cc, double conductance) {
        const auto j = static_cast<Eigen::Index>(g.index(rr, cc));
        a(i, i) += dt * kappa * conductance;
        a(i, j) -= dt * kappa * conductance;
      };
      if (c > 0) couple(r, c - 1, hy * weight(r, g.rows()) / hx);
      if (c + 1 < g.cols()) couple(r, c + 1, hy * weight(r, g.rows()) / hx);
      if (r > 0) couple(r - 1, c, hx * weight(c, g.cols()) / hy);
      if (r + 1 < g.rows()) couple(r + 1, c, hx * weight(c, g.cols()) / hy);
    }
  }
  return a.fullPivLu().solve(rhs);
}

Vector random_field(std::size_t n, double scale, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = scale * rng.uniform(-1.0, 1.0);
  return v;
}

TEST(Grid2D, CoordinatesAndAreas) {
  const Grid2D g(5, 9);
  EXPECT_EQ(g.size(), 45u);
  EXPECT_DOUBLE_EQ(g.x1(0), -1.0);
  EXPECT_DOUBLE_EQ(g.x1(8), 1.0);
  EXPECT_DOUBLE_EQ(g.x2(4), 1.0);
  EXPECT_NEAR(g.cell_areas().sum(), 4.0, 1e-14);
}

TEST(Grid2D, RejectsDegenerate) {
  EXPECT_THROW(Grid2D(1, 5), ConfigError);
}

TEST(Densities, PeakAndMass) {
  const Grid2D g(33, 33);
  const FieldState y = initial_density(Eigen::Vector2d(-0.25, 0.0), g);
  EXPECT_NEAR(y.y[static_cast<Eigen::Index>(g.index(16, 12))], 10.0 / std::numbers::pi, 1e-12);
  EXPECT_NEAR(mass(g, y.y), 1.0, 0.02);
  const FieldState t = target_density(Eigen::Vector2d(0.25, 0.0), g);
  EXPECT_NEAR(t.y.maxCoeff(), 10.0 / std::numbers::pi, 1e-12);
  EXPECT_NEAR(mass(g, t.y), 1.0, 0.02);
}

TEST(Densities, SymmetricOnAxis) {
  const Grid2D g(17, 17);
  const FieldState y = initial_density(Eigen::Vector2d(-0.5, 0.0), g);
  EXPECT_EQ(g.mirror_x2(y.y), y.y);
}

TEST(Reward, Values) {
  EXPECT_EQ(local_reward(2.0, 2.0), 0.0);
  EXPECT_EQ(local_reward(1.0, 0.0), -1.0);
  EXPECT_NEAR(local_reward(0.0, 10.0 / std::numbers::pi), -10.132, 1e-3);
}

TEST(VacuumStep, MatchesDenseOracle) {
  Rng rng(1);
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{9, 9}, {7, 11}}) {
    const Grid2D g(rows, cols);
    EnvParams p = EnvParams::vacuum();
    p.kappa = 0.05;  // large enough for the coupling to matter
    const Vector y = random_field(g.size(), 3.0, rng).cwiseAbs();
    const Vector u = random_field(g.size(), 5.0, rng);
    const Vector got = fp_vacuum_step(FieldState{y, 0}, u, g, p).y;
    EXPECT_LT((got - dense_vacuum_oracle(y, u, g, p.kappa, p.dt)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(VacuumStep, ConstantFieldFixedPoint) {
  const Grid2D g(9, 9);
  const FieldState y{Vector::Constant(81, 1.7), 3};
  const FieldState next = fp_vacuum_step(y, Vector::Zero(81), g, EnvParams::vacuum());
  EXPECT_LT((next.y - y.y).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(next.t, 4u);
}

TEST(VacuumStep, MassIdentity) {
  Rng rng(2);
  const Grid2D g(17, 17);
  FieldState y = initial_density(Eigen::Vector2d(-0.3, 0.1), g);
  for (int t = 0; t < 10; ++t) {
    const Vector u = random_field(g.size(), 5.0, rng);
    const FieldState next = fp_vacuum_step(y, u, g, EnvParams::vacuum());
    EXPECT_LE(std::abs(mass(g, next.y) - mass(g, y.y) - 0.1 * mass(g, u)), 1e-10);
    y = next;
  }
}

TEST(VacuumStep, RejectsOutOfBoundsControl) {
  const Grid2D g(5, 5);
  Vector u = Vector::Zero(25);
  u[3] = 5.5;
  EXPECT_THROW(fp_vacuum_step(FieldState{Vector::Zero(25), 0}, u, g, EnvParams::vacuum()), UsageError);
}

TEST(Velocity, AxisAlignedAtZeroAngle) {
  const Grid2D g(17, 17);
  const Matrix v = velocity_field(0.0, g);
  const auto centre = static_cast<Eigen::Index>(g.index(8, 8));
  EXPECT_NEAR(v(0, centre), 0.0, 1e-15);
  EXPECT_GT(v(1, centre), 0.0);
  EXPECT_LT(max_interior_divergence(v, g), 1e-10);
}

TEST(Velocity, AngleMirror) {
  const Grid2D g(9, 9);
  const Matrix a = velocity_field(0.6, g), b = velocity_field(-0.6, g);
  for (std::size_t r = 0; r < 9; ++r) {
    for (std::size_t c = 0; c < 9; ++c) {
      const auto i = static_cast<Eigen::Index>(g.index(r, c));
      const auto m = static_cast<Eigen::Index>(g.index(r, 8 - c));
      EXPECT_NEAR(b(0, m), -a(0, i), 1e-14);
      EXPECT_NEAR(b(1, m), a(1, i), 1e-14);
    }
  }
}

TEST(FluidStep, ConservesMassAndMovesUpward) {
  const Grid2D g(17, 17);
  FieldState y = initial_density(Eigen::Vector2d(-0.5, -0.3), g);
  const Vector areas = g.cell_areas();
  auto com2 = [&](const Vector& f) {
    double num = 0.0;
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) {
        const auto i = static_cast<Eigen::Index>(g.index(r, c));
        num += areas[i] * f[i] * g.x2(r);
      }
    }
    return num / mass(g, f);
  };
  for (int t = 0; t < 5; ++t) {
    const FieldState next = fp_fluid_step(y, Vector::Zero(static_cast<Eigen::Index>(g.size())), 0.0, g,
                                          EnvParams::fluid());
    EXPECT_LE(std::abs(mass(g, next.y) - mass(g, y.y)), 1e-8);
    EXPECT_GT(com2(next.y), com2(y.y));
    y = next;
  }
}

TEST(SampleParams, WithinBoxesAndSeeded) {
  Rng rng(3);
  const EnvParams v = EnvParams::vacuum();
  for (int k = 0; k < 500; ++k) {
    const EpisodeParams ep = sample_params(EnvKind::vacuum, v, rng);
    EXPECT_GE(ep.mu0[0], -0.75);
    EXPECT_LE(ep.mu0[0], 0.0);
    EXPECT_GE(ep.target[0], 0.0);
    EXPECT_LE(ep.target[0], 0.75);
    EXPECT_FALSE(ep.alpha.has_value());
  }
  const EnvParams f = EnvParams::fluid();
  for (int k = 0; k < 500; ++k) {
    const EpisodeParams ep = sample_params(EnvKind::fluid, f, rng);
    ASSERT_TRUE(ep.alpha.has_value());
    EXPECT_GE(*ep.alpha, -1.0);
    EXPECT_LE(*ep.alpha, 1.0);
    EXPECT_GE(ep.mu0[0], -0.75);
    EXPECT_LE(ep.mu0[0], -0.25);
  }
  Rng a(9), b(9);
  EXPECT_EQ(sample_params(EnvKind::fluid, f, a).target, sample_params(EnvKind::fluid, f, b).target);
}

TEST(Toy, StepAndOptimum) {
  EXPECT_EQ(toy_step(0.3, 0.0), 0.3);
  EXPECT_EQ(toy_step(0.3, 0.5), 0.8);
  EXPECT_EQ(toy_optimal_action(0.0, 0.4), 0.4);
  EXPECT_EQ(toy_optimal_action(-3.0, 0.4), 1.0);
  EXPECT_EQ(toy_optimal_action(3.0, 0.4), -1.0);
  EXPECT_EQ(toy_reward(0.5, 0.5), 0.0);
}

TEST(DensityEnv, ZeroControlStaticReturn) {
  const Grid2D g(9, 9);
  EnvParams p = EnvParams::vacuum();
  p.kappa = 0.0;
  const DensityEnv env(EnvKind::vacuum, g, p);
  const EpisodeParams ep{Eigen::Vector2d(-0.4, 0.2), Eigen::Vector2d(0.3, -0.1), std::nullopt};
  DensityEnv::Episode e = env.reset(ep);
  const Vector y0 = e.state.y;
  const Vector target = target_density(ep.target, g).y;
  double total = 0.0;
  for (std::size_t t = 0; t < env.steps(); ++t) total += env.step(e, Vector::Zero(81)).mean();
  EXPECT_NEAR(total, -10.0 * (y0 - target).squaredNorm() / 81.0, 1e-10);
}

TEST(DensityEnv, Dimensions) {
  const DensityEnv vac(EnvKind::vacuum, Grid2D(17, 17), EnvParams::vacuum());
  EXPECT_EQ(vac.agents(), 289u);
  EXPECT_EQ(vac.param_dim(), 2u);
  EXPECT_EQ(vac.steps(), 10u);
  const DensityEnv flu(EnvKind::fluid, Grid2D(9, 9), EnvParams::fluid());
  EXPECT_EQ(flu.param_dim(), 3u);
}

TEST(EnvParams, Validation) {
  EnvParams p = EnvParams::vacuum();
  p.dt = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = EnvParams::vacuum();
  p.kappa = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_EQ(env_kind_from_string(to_string(EnvKind::fluid)), EnvKind::fluid);
  EXPECT_THROW(env_kind_from_string("plasma"), ConfigError);
}

TEST(Snapshot, WritesOneRowPerNode) {
  const Grid2D g(5, 5);
  const auto dir = std::filesystem::temp_directory_path() / "hypemarl_snapshot_test";
  std::filesystem::create_directories(dir);
  const auto csv = dir / "snap.csv";
  export_snapshot(csv, g, initial_density(Eigen::Vector2d(-0.5, 0.0), g), 0.0,
                  SystemParams(Eigen::Vector2d(0.3, 0.1)));
  const std::string text = read_text_file(csv);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 26);
  EXPECT_EQ(text.rfind("node_index,x1,x2,y\n", 0), 0u);
  std::filesystem::remove_all(dir);
}

TEST(EnvChecks, AllPass) {
  for (const CheckResult& r : run_env_checks(7)) EXPECT_TRUE(r.pass) << r.name << " " << r.value;
}

}  // namespace
}  // namespace hypemarl
