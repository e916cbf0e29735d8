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
#include "hypemarl/marl.hpp"

namespace hypemarl {
namespace {

RunConfig tiny(Variant v) {
  RunConfig c;
  c.variant = v;
  c.grid_rows = 5;
  c.grid_cols = 5;
  c.encoding = EncodingConfig{16, 100.0};
  c.networks.main_hidden = {8};
  c.networks.hyper_hidden = {16};
  c.networks.plain_hidden = {16, 16};
  c.surrogate.hidden_dims = {16};
  c.surrogate.pretrain_steps = 20;
  c.schedule.episodes = 8;
  c.schedule.warmup = 2;
  c.schedule.eval_period = 4;
  c.schedule.eval_episodes = 2;
  c.schedule.updates_per_episode = 3;
  c.schedule.surrogate_ratio = 2;
  c.td3.batch_size = 8;
  c.actor_lr = 1e-3;
  c.critic_lr = 1e-3;
  return c;
}

void zero_actor(AgentStack& s) { s.learner->nets().actor.online.setZero(); }

TEST(VariantSelect, InputAndOutputDimensions) {
  Rng rng(1);
  const AgentStack marl = variant_select(tiny(Variant::marl), 25, 2, rng);
  EXPECT_EQ(marl.actor->input_dim() + marl.actor->condition_dim(), 3u);
  EXPECT_EQ(marl.actor->output_dim(), 1u);
  const AgentStack single = variant_select(tiny(Variant::single_rl), 25, 2, rng);
  EXPECT_EQ(single.actor->output_dim(), 25u);
  EXPECT_EQ(single.actor->input_dim(), 25u);
  EXPECT_TRUE(single.global());
  const AgentStack hyper = variant_select(tiny(Variant::hypemarl), 25, 2, rng);
  EXPECT_EQ(hyper.actor->input_dim(), 1u);
  EXPECT_EQ(hyper.actor->condition_dim(), 18u);
  ASSERT_TRUE(hyper.encodings);
  EXPECT_EQ(hyper.encodings->agents(), 25u);
}

TEST(VariantSelect, FullScaleSingleRlActsOnWholeField) {
  Rng rng(2);
  RunConfig c = tiny(Variant::single_rl);
  c.networks.plain_hidden = {4};
  const AgentStack s = variant_select(c, 1089, 2, rng);
  EXPECT_EQ(s.actor->output_dim(), 1089u);
}

TEST(AgentStack, ConditionsCarryEncodingAndMu) {
  Rng rng(3);
  const RunConfig c = tiny(Variant::hypemarl);
  const AgentStack s = variant_select(c, 25, 2, rng);
  const Vector mu = (Vector(2) << 0.4, -0.2).finished();
  const Matrix cond = s.episode_conditions(mu);
  ASSERT_EQ(cond.cols(), 25);
  for (Eigen::Index i = 0; i < 25; ++i) {
    EXPECT_EQ(Vector(cond.col(i).head(16)), positional_encoding(static_cast<double>(i), c.encoding));
    EXPECT_EQ(Vector(cond.col(i).tail(2)), mu);
  }
  const Matrix batch = s.batch_conditions({3, 7}, mu.replicate(1, 2));
  EXPECT_EQ(Vector(batch.col(1).head(16)), positional_encoding(7.0, c.encoding));
}

TEST(AgentStack, SharedInputsShareActions) {
  Rng rng(4);
  const AgentStack s = variant_select(tiny(Variant::marl), 25, 2, rng);
  const JointPolicy pi = s.policy((Vector(2) << 0.2, 0.1).finished());
  const Vector u = pi(Vector::Constant(25, 0.8));
  // Without positional information every agent with the same state acts alike.
  EXPECT_LT((u.array() - u[0]).abs().maxCoeff(), 1e-15);
}

TEST(RunEpisode, TransitionCount) {
  Rng rng(5);
  const RunConfig c = tiny(Variant::hypemarl);
  const DensityEnv env = make_env(c);
  const AgentStack s = variant_select(c, env.agents(), env.param_dim(), rng);
  const EpisodeParams ep = env.sample(rng);
  const EpisodeResult r = run_episode(env, ep, s.policy(env.system_params(ep).values), 0.5, false, rng);
  EXPECT_EQ(r.transitions.size(), 25u * 10u);
  EXPECT_EQ(r.step_rewards.size(), 10u);
  const EpisodeResult g = run_episode(env, ep, s.policy(env.system_params(ep).values), 0.5, true, rng);
  EXPECT_EQ(g.transitions.size(), 10u);
}

TEST(RunEpisode, ZeroPolicyStaticReturn) {
  Rng rng(6);
  RunConfig c = tiny(Variant::marl);
  c.env_params.kappa = 0.0;
  const DensityEnv env = make_env(c);
  AgentStack s = variant_select(c, env.agents(), env.param_dim(), rng);
  zero_actor(s);
  const EpisodeParams ep{Eigen::Vector2d(-0.5, 0.3), Eigen::Vector2d(0.5, -0.2), std::nullopt};
  const EpisodeResult r = run_episode(env, ep, s.policy(env.system_params(ep).values), 0.0, false, rng);
  const Vector y0 = initial_density(ep.mu0, env.grid()).y;
  const Vector yt = target_density(ep.target, env.grid()).y;
  EXPECT_NEAR(r.episode_return, -10.0 * (y0 - yt).squaredNorm() / 25.0, 1e-12);
  EXPECT_NEAR(r.final_mse, (y0 - yt).squaredNorm() / 25.0, 1e-12);
}

TEST(RunEpisode, SeededDeterminism) {
  const RunConfig c = tiny(Variant::hypemarl);
  const DensityEnv env = make_env(c);
  Rng a(7), b(7);
  const AgentStack sa = variant_select(c, env.agents(), env.param_dim(), a);
  const AgentStack sb = variant_select(c, env.agents(), env.param_dim(), b);
  const EpisodeParams ep = env.sample(a);
  env.sample(b);
  const EpisodeResult ra = run_episode(env, ep, sa.policy(env.system_params(ep).values), 0.3, false, a);
  const EpisodeResult rb = run_episode(env, ep, sb.policy(env.system_params(ep).values), 0.3, false, b);
  EXPECT_EQ(ra.final_state, rb.final_state);
  EXPECT_EQ(ra.episode_return, rb.episode_return);
}

TEST(Evaluate, ZeroPolicyMatchesUncontrolled) {
  Rng rng(8);
  const RunConfig c = tiny(Variant::hypemarl);
  const DensityEnv env = make_env(c);
  AgentStack s = variant_select(c, env.agents(), env.param_dim(), rng);
  zero_actor(s);
  const EvalSummary sum = evaluate(env, s, eval_tuples(env, 11, 5));
  ASSERT_EQ(sum.episodes.size(), 5u);
  EXPECT_NEAR(sum.mean_final_mse, sum.mean_baseline_mse, 1e-14);
}

TEST(Evaluate, TuplesAreFixedBySeed) {
  const DensityEnv env = make_env(tiny(Variant::marl));
  const auto a = eval_tuples(env, 3, 5), b = eval_tuples(env, 3, 5), c = eval_tuples(env, 4, 5);
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(a[k].mu0, b[k].mu0);
    EXPECT_EQ(a[k].target, b[k].target);
  }
  EXPECT_NE(a[0].mu0, c[0].mu0);
}

TEST(Schedule, ModelFreeIsAllReal) {
  TrainSchedule s;
  EXPECT_EQ(count_real_episodes(s, Variant::hypemarl, 500), 500u);
  EXPECT_EQ(count_real_episodes(s, Variant::marl, 150), 150u);
}

TEST(Schedule, ModelBasedCounts) {
  TrainSchedule s;
  s.warmup = 25;
  s.surrogate_ratio = 10;
  const std::size_t n = count_real_episodes(s, Variant::mb_hypemarl, 500);
  // 25 warm-up episodes plus one real episode every 11 afterwards.
  EXPECT_EQ(n, 25u + (500u - 25u + 10u) / 11u);
  EXPECT_LT(n, 100u);
  s.warmup = 10;
  EXPECT_EQ(count_real_episodes(s, Variant::mb_hypemarl, 150), 23u);
  for (std::size_t e = 0; e < 10; ++e) EXPECT_TRUE(is_real_episode(s, Variant::mb_hypemarl, e));
  EXPECT_TRUE(is_real_episode(s, Variant::mb_hypemarl, 21));
  EXPECT_FALSE(is_real_episode(s, Variant::mb_hypemarl, 22));
}

TEST(Trainer, WarmupOnlyRunHasNoUpdates) {
  RunConfig c = tiny(Variant::hypemarl);
  c.schedule.episodes = 3;
  c.schedule.warmup = 2;
  Trainer t(c, 0);
  t.step();
  t.step();
  EXPECT_EQ(t.agent_updates(), 0u);
  EXPECT_EQ(t.real_buffer().size(), 2u * 25u * 10u);
  t.step();
  EXPECT_EQ(t.agent_updates(), 3u);
  EXPECT_TRUE(t.finished());
}

TEST(Trainer, RowsAndEvaluationCadence) {
  const RunConfig c = tiny(Variant::marl);
  Trainer t(c, 1);
  std::vector<MetricRow> rows;
  t.run(c.schedule.episodes, [&](const MetricRow& r) { rows.push_back(r); });
  std::size_t evals = 0;
  for (const MetricRow& r : rows) evals += r.mode == "eval" ? 1 : 0;
  EXPECT_EQ(evals, 2u);  // after episodes 4 and 8
  EXPECT_EQ(t.real_episodes(), 8u);
  ASSERT_TRUE(t.last_eval().has_value());
  EXPECT_EQ(t.last_eval()->episodes.size(), 2u);
}

TEST(Trainer, ModelBasedUsesSurrogateEpisodes) {
  const RunConfig c = tiny(Variant::mb_hypemarl);
  Trainer t(c, 2);
  std::vector<MetricRow> rows;
  t.run(c.schedule.episodes, [&](const MetricRow& r) { rows.push_back(r); });
  EXPECT_EQ(t.real_episodes(), count_real_episodes(c.schedule, c.variant, 8));
  EXPECT_LT(t.real_episodes(), 8u);
  ASSERT_TRUE(t.surrogate().has_value());
  EXPECT_GT(t.surrogate_updates(), 0u);
  std::size_t synthetic = 0;
  for (const MetricRow& r : rows) synthetic += r.mode == "surrogate" ? 1 : 0;
  EXPECT_EQ(synthetic, 8u - t.real_episodes());
  // Only real transitions ever reach the real buffer.
  EXPECT_EQ(t.real_buffer().inserted(), t.real_episodes() * 25u * 10u);
}

TEST(Trainer, SameSeedSameRows) {
  const RunConfig c = tiny(Variant::mb_hypemarl);
  Trainer a(c, 5), b(c, 5);
  for (int e = 0; e < 8; ++e) {
    const auto ra = a.step(), rb = b.step();
    ASSERT_EQ(ra.size(), rb.size());
    for (std::size_t k = 0; k < ra.size(); ++k) {
      MetricRow x = ra[k], y = rb[k];
      x.wall_time = y.wall_time = 0.0;
      EXPECT_EQ(format_metric_row(x), format_metric_row(y));
    }
  }
}

TEST(Trainer, RejectsInvalidConfig) {
  RunConfig c = tiny(Variant::marl);
  c.schedule.warmup = c.schedule.episodes;
  EXPECT_THROW(Trainer(c, 0), ConfigError);
}

TEST(Trainer, SingleRlRuns) {
  const RunConfig c = tiny(Variant::single_rl);
  Trainer t(c, 3);
  t.run(c.schedule.episodes, {});
  EXPECT_TRUE(t.finished());
  EXPECT_EQ(t.real_buffer().size(), 8u * 10u);
}

}  // namespace
}  // namespace hypemarl
