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

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "hypemarl/checkpoint.hpp"
#include "hypemarl/error.hpp"
#include "hypemarl/harness.hpp"
#include "hypemarl/metrics.hpp"

namespace hypemarl {
namespace {

namespace fs = std::filesystem;

const char* kTinyConfig = R"(
variant = "mb-hypemarl"
seeds = [0, 1]
output_dir = "runs"
[env]
rows = 5
cols = 5
[schedule]
episodes = 8
warmup = 2
eval_period = 4
eval_episodes = 2
updates_per_episode = 3
surrogate_ratio = 2
[td3]
batch_size = 8
actor_lr = 1e-3
critic_lr = 1e-3
[encoding]
dim = 16
base = 100
[networks]
main_hidden = [8]
hyper_hidden = [16]
plain_hidden = [16, 16]
[surrogate]
hidden = [16]
pretrain_steps = 20
)";

class Persistence : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("hypemarl_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
    config_ = root_ / "tiny.toml";
    write_text_file(config_, kTinyConfig);
    setenv("HYPEMARL_OUTPUT_ROOT", root_.c_str(), 1);
  }
  void TearDown() override {
    unsetenv("HYPEMARL_OUTPUT_ROOT");
    fs::remove_all(root_);
  }

  std::vector<RunRecord> train(std::optional<std::uint64_t> seed = std::nullopt,
                               std::optional<std::size_t> until = std::nullopt) {
    TrainOptions o;
    o.config = config_;
    o.seed = seed;
    o.until = until;
    o.quiet = true;
    std::ostringstream log;
    return cmd_train(o, log);
  }

  static std::string strip_wall_time(const fs::path& metrics) {
    std::string out;
    for (const MetricRow& r : read_metric_log(metrics)) {
      MetricRow c = r;
      c.wall_time = 0.0;
      out += format_metric_row(c) + "\n";
    }
    return out;
  }

  fs::path root_;
  fs::path config_;
};

TEST_F(Persistence, TrainWritesRunLayout) {
  const auto runs = train();
  ASSERT_EQ(runs.size(), 2u);
  for (std::uint64_t seed : {0, 1}) {
    const fs::path dir = root_ / "runs" / "mb-hypemarl" / ("seed_" + std::to_string(seed));
    EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
    EXPECT_TRUE(fs::exists(dir / "eval.csv"));
    EXPECT_TRUE(fs::exists(dir / "config.json"));
    EXPECT_TRUE(fs::exists(dir / "checkpoints" / "episode_000008" / "manifest.json"));
  }
  const auto rows = read_metric_log(runs[0].dir / "metrics.csv");
  EXPECT_EQ(rows.size(), 8u + 2u);
  EXPECT_EQ(rows.back().real_episodes, runs[0].real_episodes);
}

TEST_F(Persistence, IdenticalSeedsGiveIdenticalLogs) {
  const auto first = train(0);
  const std::string a = strip_wall_time(first[0].dir / "metrics.csv");
  const std::string eval_a = read_text_file(first[0].dir / "eval.csv");
  fs::rename(first[0].dir, root_ / "first");
  const auto second = train(0);
  EXPECT_EQ(strip_wall_time(second[0].dir / "metrics.csv"), a);
  EXPECT_EQ(read_text_file(second[0].dir / "eval.csv"), eval_a);
}

TEST_F(Persistence, ResumeSplicesSeamlessly) {
  const auto full = train(1);
  const std::string unbroken = strip_wall_time(full[0].dir / "metrics.csv");
  const std::string unbroken_eval = read_text_file(full[0].dir / "eval.csv");
  fs::remove_all(root_ / "runs");

  const auto partial = train(1, 5);
  EXPECT_EQ(partial[0].episodes, 5u);
  TrainOptions resume;
  resume.resume = partial[0].dir / "checkpoints" / "episode_000005";
  resume.quiet = true;
  std::ostringstream log;
  const auto resumed = cmd_train(resume, log);
  EXPECT_EQ(resumed[0].episodes, 8u);
  EXPECT_EQ(strip_wall_time(resumed[0].dir / "metrics.csv"), unbroken);
  EXPECT_EQ(read_text_file(resumed[0].dir / "eval.csv"), unbroken_eval);
}

TEST_F(Persistence, SaveLoadSaveIsByteIdentical) {
  const auto runs = train(0);
  const fs::path ckpt = runs[0].dir / "checkpoints" / "episode_000008";
  const Trainer t = Trainer::load(ckpt);
  const fs::path again = root_ / "again";
  t.save(again);
  for (const auto& entry : fs::directory_iterator(ckpt)) {
    EXPECT_EQ(read_text_file(entry.path()), read_text_file(again / entry.path().filename()))
        << entry.path().filename();
  }
  EXPECT_EQ(std::distance(fs::directory_iterator(ckpt), fs::directory_iterator{}),
            std::distance(fs::directory_iterator(again), fs::directory_iterator{}));
}

TEST_F(Persistence, LoadedWeightsAndActionsMatch) {
  const RunConfig cfg = parse_config(config_);
  Trainer t(cfg, 3);
  for (int e = 0; e < 5; ++e) t.step();
  t.save(root_ / "ckpt");
  const Trainer back = Trainer::load(root_ / "ckpt");
  const Td3Nets& a = t.agents().learner->nets();
  const Td3Nets& b = back.agents().learner->nets();
  EXPECT_EQ(a.actor.online, b.actor.online);
  EXPECT_EQ(a.critic2.target, b.critic2.target);
  EXPECT_EQ(a.actor.adam.v, b.actor.adam.v);
  EXPECT_EQ(a.actor.adam.step, b.actor.adam.step);
  ASSERT_TRUE(back.surrogate().has_value());
  EXPECT_EQ(t.surrogate()->weights(), back.surrogate()->weights());
  EXPECT_EQ(back.episode(), 5u);
  EXPECT_EQ(back.real_episodes(), t.real_episodes());
  const Vector mu = (Vector(2) << 0.3, 0.2).finished();
  const Vector y = Vector::LinSpaced(25, 0.0, 3.0);
  EXPECT_EQ(t.agents().policy(mu)(y), back.agents().policy(mu)(y));
}

TEST_F(Persistence, ConfigHashMismatchRefusedUnlessForced) {
  const RunConfig cfg = parse_config(config_);
  Trainer t(cfg, 0);
  t.step();
  t.save(root_ / "ckpt");
  RunConfig changed = cfg;
  changed.td3.gamma = 0.5;
  EXPECT_THROW(Trainer::load(root_ / "ckpt", &changed, false), CompatibilityError);
  const Trainer forced = Trainer::load(root_ / "ckpt", &changed, true);
  EXPECT_EQ(forced.config().td3.gamma, 0.5);
  EXPECT_NO_THROW(Trainer::load(root_ / "ckpt", &cfg, false));
}

TEST_F(Persistence, VersionMismatchIsExplicit) {
  const RunConfig cfg = parse_config(config_);
  Trainer t(cfg, 0);
  t.save(root_ / "ckpt");
  std::string manifest = read_text_file(root_ / "ckpt" / "manifest.json");
  const std::string key = "\"version\": 1";
  const auto at = manifest.find(key);
  ASSERT_NE(at, std::string::npos);
  manifest.replace(at, key.size(), "\"version\": 99");
  write_text_file(root_ / "ckpt" / "manifest.json", manifest);
  EXPECT_THROW(Trainer::load(root_ / "ckpt"), CompatibilityError);
  EXPECT_THROW(Trainer::load(root_ / "missing"), IoError);
}

TEST_F(Persistence, EvalReproducesLoggedReturn) {
  const auto runs = train(0);
  const auto rows = read_metric_log(runs[0].dir / "metrics.csv");
  ASSERT_EQ(rows.back().mode, "eval");
  EvalOptions o;
  o.checkpoint = runs[0].dir / "checkpoints" / "episode_000008";
  o.episodes = 2;
  std::ostringstream log;
  const EvalSummary s = cmd_eval(o, log);
  EXPECT_EQ(s.mean_return, rows.back().mean_return);
  const fs::path out = runs[0].dir / "eval" / "episode_000008";
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  EXPECT_TRUE(fs::exists(out / "trace_episode_1.csv"));
  EXPECT_TRUE(fs::exists(out / "snapshot_episode_0_final.csv"));
}

TEST_F(Persistence, EvalWritesOneTracePerTuple) {
  const auto runs = train(0);
  EvalOptions o;
  o.checkpoint = runs[0].dir / "checkpoints" / "episode_000008";
  o.episodes = 5;
  std::ostringstream log;
  cmd_eval(o, log);
  std::size_t traces = 0;
  for (const auto& e : fs::directory_iterator(runs[0].dir / "eval" / "episode_000008")) {
    traces += e.path().filename().string().rfind("trace_", 0) == 0 ? 1 : 0;
  }
  EXPECT_EQ(traces, 5u);
}

TEST_F(Persistence, ExportQuantiles) {
  // Hand-made logs: returns 1..5 at episode 0 across five seeds.
  const fs::path variant = root_ / "handmade";
  for (int s = 1; s <= 5; ++s) {
    const fs::path dir = variant / ("seed_" + std::to_string(s));
    fs::create_directories(dir);
    MetricRow r;
    r.episode = 0;
    r.mode = "real";
    r.mean_return = s;
    write_text_file(dir / "metrics.csv", std::string(kMetricHeader) + "\n" + format_metric_row(r) + "\n");
  }
  std::ostringstream log;
  cmd_export(variant, log);
  const std::string text = read_text_file(variant / "export_returns.csv");
  EXPECT_EQ(text, "episode,p25,p50,p75\n0,2,3,4\n");
}

TEST_F(Persistence, ExportSingleSeedCollapses) {
  const auto runs = train(0);
  std::ostringstream log;
  cmd_export(runs[0].dir, log);
  std::istringstream in(read_text_file(runs[0].dir / "export_eval.csv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    ASSERT_EQ(f.size(), 4u);
    EXPECT_EQ(f[1], f[2]);
    EXPECT_EQ(f[2], f[3]);
  }
}

TEST_F(Persistence, ExportMissingDirectoryIsIoError) {
  std::ostringstream log;
  EXPECT_THROW(cmd_export(root_ / "nothing", log), IoError);
}

}  // namespace
}  // namespace hypemarl
