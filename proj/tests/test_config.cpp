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

#include "hypemarl/config.hpp"
#include "hypemarl/error.hpp"
#include "hypemarl/metrics.hpp"

namespace hypemarl {
namespace {

TEST(ParseConfig, EmptyFileGivesDefaults) {
  const RunConfig c = parse_config_text("");
  EXPECT_EQ(c.variant, Variant::hypemarl);
  EXPECT_EQ(c.td3.gamma, 0.99);
  EXPECT_EQ(c.td3.batch_size, 32u);
  EXPECT_EQ(c.td3_hyper().actor_lr, 1e-6);
  EXPECT_EQ(c.grid_rows, 33u);
  EXPECT_EQ(c.env_params.kappa, 0.001);
  EXPECT_EQ(c.encoding.dim, 2048u);
  RunConfig plain = c;
  plain.variant = Variant::marl;
  EXPECT_EQ(plain.td3_hyper().actor_lr, 3e-4);
  EXPECT_EQ(plain.td3_hyper().critic_lr, 3e-4);
}

TEST(ParseConfig, Overrides) {
  const RunConfig c = parse_config_text(R"(
variant = "mb-hypemarl"   # comment
seeds = [1, 2, 3, 4, 5]
[env]
rows = 17
cols = 17
[schedule]
episodes = 150
warmup = 10
[td3]
gamma = 0.9
actor_lr = 1e-4
[networks]
main_hidden = [64]
[surrogate]
residual = false
)");
  EXPECT_EQ(c.variant, Variant::mb_hypemarl);
  EXPECT_EQ(c.seeds.size(), 5u);
  EXPECT_EQ(c.seeds.back(), 5u);
  EXPECT_EQ(c.grid_rows, 17u);
  EXPECT_EQ(c.schedule.episodes, 150u);
  EXPECT_EQ(c.td3.gamma, 0.9);
  EXPECT_EQ(c.td3_hyper().actor_lr, 1e-4);
  EXPECT_EQ(c.td3_hyper().critic_lr, 5e-5);
  EXPECT_EQ(c.networks.main_hidden, std::vector<std::size_t>{64});
  EXPECT_FALSE(c.surrogate.residual);
}

TEST(ParseConfig, FluidKindSwitchesDefaults) {
  const RunConfig c = parse_config_text("[env]\nkind = \"fluid\"\n");
  EXPECT_EQ(c.env, EnvKind::fluid);
  EXPECT_EQ(c.env_params.mu0_box.lo1, -0.75);
  EXPECT_EQ(c.env_params.mu0_box.hi1, -0.25);
}

TEST(ParseConfig, RejectsBadInput) {
  EXPECT_THROW(parse_config_text("[td3]\ngamma = 1.5\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[td3]\ngama = 0.5\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[env]\nrows = -3\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[env]\nrows = 2.5\n"), ConfigError);
  EXPECT_THROW(parse_config_text("variant = \"ppo\"\n"), ConfigError);
  EXPECT_THROW(parse_config_text("variant = hypemarl\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[schedule\n"), ConfigError);
  EXPECT_THROW(parse_config_text("seeds = [1, 2\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[td3]\ngamma = 0.5\ngamma = 0.6\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[schedule]\nepisodes = 5\nwarmup = 5\n"), ConfigError);
}

TEST(ParseConfig, ErrorNamesTheKey) {
  try {
    parse_config_text("[td3]\ngamma = 1.5\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma"), std::string::npos);
  }
  try {
    parse_config_text("[td3]\nbatch_size = \"big\"\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("td3.batch_size"), std::string::npos);
  }
}

TEST(ParseConfig, MissingFileIsIoError) {
  EXPECT_THROW(parse_config("/nonexistent/hypemarl.toml"), IoError);
}

TEST(CanonicalConfig, RoundTripAndHash) {
  RunConfig c = parse_config_text("variant = \"marl\"\n[env]\nrows = 9\n[td3]\ncritic_lr = 2e-4\n");
  const std::string text = canonical_config(c);
  const RunConfig back = config_from_canonical(text);
  EXPECT_EQ(canonical_config(back), text);
  EXPECT_EQ(config_hash(back), config_hash(c));
  RunConfig other = c;
  other.td3.gamma = 0.5;
  EXPECT_NE(config_hash(other), config_hash(c));
  // Seeds and output location do not change what a run computes.
  RunConfig moved = c;
  moved.seeds = {7, 8};
  moved.output_dir = "elsewhere";
  EXPECT_EQ(config_hash(moved), config_hash(c));
}

TEST(CanonicalConfig, CorruptTextIsCompatibilityError) {
  EXPECT_THROW(config_from_canonical("{not json"), CompatibilityError);
}

TEST(Variant, Names) {
  for (Variant v : {Variant::hypemarl, Variant::mb_hypemarl, Variant::marl, Variant::single_rl}) {
    EXPECT_EQ(variant_from_string(to_string(v)), v);
  }
  EXPECT_TRUE(uses_hypernet(Variant::mb_hypemarl));
  EXPECT_FALSE(uses_hypernet(Variant::single_rl));
}

TEST(TrainSchedule, UpdatesPerEpisode) {
  TrainSchedule s;
  EXPECT_EQ(s.updates(10), 10u);
  s.updates_per_episode = 50;
  EXPECT_EQ(s.updates(10), 50u);
}

TEST(Metrics, RowRoundTrip) {
  MetricRow r;
  r.episode = 12;
  r.mode = "surrogate";
  r.mean_return = -1.0 / 3.0;
  r.critic_loss = 0.125;
  r.wall_time = 1.5;
  r.real_episodes = 4;
  const MetricRow back = parse_metric_row(format_metric_row(r));
  EXPECT_EQ(back.episode, 12u);
  EXPECT_EQ(back.mode, "surrogate");
  EXPECT_EQ(back.mean_return, r.mean_return);
  EXPECT_EQ(back.critic_loss, 0.125);
  EXPECT_TRUE(std::isnan(back.actor_loss));
  EXPECT_EQ(back.real_episodes, 4u);
  EXPECT_NE(format_metric_row(r).find(",nan,"), std::string::npos);
}

TEST(Metrics, Quantiles) {
  const std::vector<double> v{5, 1, 4, 2, 3};
  EXPECT_EQ(quantile(v, 0.5), 3.0);
  EXPECT_EQ(quantile(v, 0.25), 2.0);
  EXPECT_EQ(quantile(v, 0.75), 4.0);
  EXPECT_EQ(quantile({2.0, 4.0}, 0.5), 3.0);
  EXPECT_EQ(quantile({7.0}, 0.25), 7.0);
  EXPECT_THROW(quantile({}, 0.5), UsageError);
}

}  // namespace
}  // namespace hypemarl
