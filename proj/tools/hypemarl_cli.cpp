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

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hypemarl/checks.hpp"
#include "hypemarl/error.hpp"
#include "hypemarl/harness.hpp"

namespace {

int report(const std::vector<hypemarl::CheckResult>& results) {
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%-28s %-4s value=%.3e tol=%.1e\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                r.value, r.tolerance);
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HypeMARL: hypernetwork multi-agent TD3 for density control"};
  app.require_subcommand(1);

  hypemarl::TrainOptions train_opts;
  std::string config_path, variant_name, resume_path;
  std::uint64_t seed = 0;
  std::size_t until = 0;
  auto* train = app.add_subcommand("train", "Train one or more seeds of a variant");
  train->add_option("--config", config_path, "TOML config file (defaults if omitted)")
      ->check(CLI::ExistingFile);
  auto* seed_opt = train->add_option("--seed", seed, "Run only this seed");
  train->add_option("--variant", variant_name, "hypemarl | mb-hypemarl | marl | single-rl");
  train->add_option("--resume", resume_path, "Continue from a checkpoint directory");
  auto* until_opt = train->add_option("--until", until, "Stop after this many episodes");
  train->add_flag("--force", train_opts.force, "Resume despite a config hash mismatch");
  train->add_flag("--quiet", train_opts.quiet, "Suppress progress lines");

  hypemarl::EvalOptions eval_opts;
  std::string checkpoint_path;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the fixed evaluation tuples");
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint directory")->required();
  eval->add_option("--episodes", eval_opts.episodes, "Number of evaluation tuples");

  std::string run_dir;
  auto* exp = app.add_subcommand("export", "Aggregate seeds into p25/p50/p75 CSVs");
  exp->add_option("--run-dir", run_dir, "Variant directory holding seed_* runs")->required();

  std::uint64_t check_seed = 0;
  auto* grad = app.add_subcommand("grad-check", "Run the gradient oracle suite");
  grad->add_option("--seed", check_seed, "Probe seed");
  std::size_t rows = 17, cols = 17;
  auto* envc = app.add_subcommand("env-check", "Run the PDE identity suite");
  envc->add_option("--seed", check_seed, "Field seed");
  envc->add_option("--rows", rows, "Grid rows");
  envc->add_option("--cols", cols, "Grid columns");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      if (!config_path.empty()) train_opts.config = config_path;
      if (*seed_opt) train_opts.seed = seed;
      if (!variant_name.empty()) train_opts.variant = hypemarl::variant_from_string(variant_name);
      if (!resume_path.empty()) train_opts.resume = resume_path;
      if (*until_opt) train_opts.until = until;
      for (const auto& r : hypemarl::cmd_train(train_opts, std::cout)) {
        std::cout << "run " << r.dir.string() << " episodes " << r.episodes << " real episodes "
                  << r.real_episodes << '\n';
      }
      return 0;
    }
    if (*eval) {
      eval_opts.checkpoint = checkpoint_path;
      hypemarl::cmd_eval(eval_opts, std::cout);
      return 0;
    }
    if (*exp) {
      hypemarl::cmd_export(run_dir, std::cout);
      return 0;
    }
    if (*grad) return report(hypemarl::run_grad_checks(check_seed));
    if (*envc) return report(hypemarl::run_env_checks(check_seed, rows, cols));
  } catch (const hypemarl::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const hypemarl::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const hypemarl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
