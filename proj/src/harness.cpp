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

#include "hypemarl/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hypemarl/checkpoint.hpp"
#include "hypemarl/error.hpp"
#include "hypemarl/metrics.hpp"

namespace hypemarl {

namespace fs = std::filesystem;

namespace {

const char* const kEvalHeader = "episode,tuple,return,final_mse,baseline_mse";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string checkpoint_name(std::size_t episode) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "episode_%06zu", episode);
  return buf;
}

/// Keeps the header and the rows whose leading episode field is below `episode`.
void truncate_log(const fs::path& path, std::size_t episode) {
  if (!fs::exists(path)) return;
  std::istringstream in(read_text_file(path));
  std::string line;
  std::string kept;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      kept += line + '\n';
      header = false;
      continue;
    }
    const std::size_t e = std::stoull(line.substr(0, line.find(',')));
    if (e < episode) kept += line + '\n';
  }
  write_text_file(path, kept);
}

/// <run>/checkpoints/<name> -> <run>; anything else -> the checkpoint itself.
fs::path run_of_checkpoint(const fs::path& ckpt) {
  const fs::path dir = fs::absolute(checkpoint_dir(ckpt)).lexically_normal();
  const fs::path parent = dir.parent_path();
  if (parent.filename() == "checkpoints") return parent.parent_path();
  return dir;
}

void append_eval(std::ofstream& out, std::size_t episode, const EvalSummary& s) {
  for (std::size_t k = 0; k < s.episodes.size(); ++k) {
    const EvalEpisode& e = s.episodes[k];
    out << episode << ',' << k << ',' << num(e.controlled.episode_return) << ','
        << num(e.controlled.final_mse) << ',' << num(e.uncontrolled.final_mse) << '\n';
  }
  out.flush();
}

RunRecord run_one(Trainer& trainer, const fs::path& dir, const TrainOptions& opts,
                  std::ostream& log) {
  make_dirs(dir / "checkpoints");
  write_text_file(dir / "config.json", canonical_config(trainer.config()) + "\n");
  const fs::path eval_path = dir / "eval.csv";
  if (trainer.episode() > 0) {
    truncate_log(dir / "metrics.csv", trainer.episode());
    truncate_log(eval_path, trainer.episode());
  } else {
    std::error_code ec;
    fs::remove(dir / "metrics.csv", ec);
    fs::remove(eval_path, ec);
  }
  MetricLog metrics(dir / "metrics.csv");
  const bool fresh_eval = !fs::exists(eval_path);
  std::ofstream eval(eval_path, std::ios::app);
  if (!eval) throw IoError("cannot open " + eval_path.string());
  if (fresh_eval) eval << kEvalHeader << '\n';

  const TrainSchedule& sch = trainer.config().schedule;
  const std::size_t until = opts.until.value_or(sch.episodes);
  while (!trainer.finished() && trainer.episode() < until) {
    const std::vector<MetricRow> rows = trainer.step();
    for (const MetricRow& r : rows) {
      metrics.append(r);
      if (r.mode == "eval") {
        append_eval(eval, r.episode, *trainer.last_eval());
        if (!opts.quiet) {
          log << to_string(trainer.config().variant) << " seed " << trainer.seed() << " episode "
              << r.episode + 1 << "/" << sch.episodes << " eval return " << num(r.mean_return)
              << " final mse " << num(trainer.last_eval()->mean_final_mse) << " (uncontrolled "
              << num(trainer.last_eval()->mean_baseline_mse) << ") real episodes "
              << r.real_episodes << '\n'
              << std::flush;
        }
      }
    }
    const std::size_t done = trainer.episode();
    if (sch.checkpoint_period > 0 && done % sch.checkpoint_period == 0 && done < until) {
      trainer.save(dir / "checkpoints" / checkpoint_name(done));
    }
  }
  trainer.save(dir / "checkpoints" / checkpoint_name(trainer.episode()));
  RunRecord rec;
  rec.dir = dir;
  rec.seed = trainer.seed();
  rec.episodes = trainer.episode();
  rec.real_episodes = trainer.real_episodes();
  rec.final_eval = trainer.last_eval();
  return rec;
}

}  // namespace

fs::path output_root() {
  const char* env = std::getenv("HYPEMARL_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::current_path();
}

fs::path run_directory(const fs::path& root, const RunConfig& cfg, std::uint64_t seed) {
  return root / cfg.output_dir / to_string(cfg.variant) / ("seed_" + std::to_string(seed));
}

std::vector<RunRecord> cmd_train(const TrainOptions& opts, std::ostream& log) {
  std::optional<RunConfig> cfg;
  if (opts.config) cfg = parse_config(*opts.config);
  if (opts.variant) {
    if (!cfg) cfg = RunConfig{};
    cfg->variant = *opts.variant;
  }
  if (cfg) cfg->validate();

  std::vector<RunRecord> out;
  if (opts.resume) {
    Trainer trainer = Trainer::load(*opts.resume, cfg ? &*cfg : nullptr, opts.force);
    if (opts.seed && *opts.seed != trainer.seed()) {
      throw UsageError("--seed " + std::to_string(*opts.seed) + " disagrees with checkpoint seed " +
                       std::to_string(trainer.seed()));
    }
    out.push_back(run_one(trainer, run_of_checkpoint(*opts.resume), opts, log));
    return out;
  }
  if (!cfg) cfg = RunConfig{};
  const std::vector<std::uint64_t> seeds =
      opts.seed ? std::vector<std::uint64_t>{*opts.seed} : cfg->seeds;
  const fs::path root = output_root();
  for (std::uint64_t seed : seeds) {
    Trainer trainer(*cfg, seed);
    out.push_back(run_one(trainer, run_directory(root, *cfg, seed), opts, log));
  }
  return out;
}

EvalSummary cmd_eval(const EvalOptions& opts, std::ostream& log) {
  if (opts.episodes == 0) throw UsageError("--episodes must be >= 1");
  const Trainer trainer = Trainer::load(opts.checkpoint);
  const EvalSummary s = trainer.evaluate_now(opts.episodes);
  const fs::path ckpt = fs::absolute(checkpoint_dir(opts.checkpoint)).lexically_normal();
  const fs::path dir = run_of_checkpoint(ckpt) / "eval" / ckpt.filename();
  make_dirs(dir);
  const DensityEnv& env = trainer.env();
  const double t_final = static_cast<double>(env.steps()) * env.params().dt;
  nlohmann::json summary;
  std::vector<double> returns;
  for (std::size_t k = 0; k < s.episodes.size(); ++k) {
    const EvalEpisode& e = s.episodes[k];
    std::string trace = "step,mean_reward,mean_reward_uncontrolled\n";
    for (std::size_t t = 0; t < e.controlled.step_rewards.size(); ++t) {
      trace += std::to_string(t + 1) + ',' + num(e.controlled.step_rewards[t]) + ',' +
               num(e.uncontrolled.step_rewards[t]) + '\n';
    }
    const std::string tag = "episode_" + std::to_string(k);
    write_text_file(dir / ("trace_" + tag + ".csv"), trace);
    const SystemParams mu = env.system_params(e.params);
    const std::size_t steps = env.steps();
    export_snapshot(dir / ("snapshot_" + tag + "_initial.csv"), env.grid(),
                    initial_density(e.params.mu0, env.grid()), 0.0, mu);
    export_snapshot(dir / ("snapshot_" + tag + "_final.csv"), env.grid(),
                    FieldState{e.controlled.final_state, steps}, t_final, mu);
    export_snapshot(dir / ("snapshot_" + tag + "_uncontrolled.csv"), env.grid(),
                    FieldState{e.uncontrolled.final_state, steps}, t_final, mu);
    export_snapshot(dir / ("snapshot_" + tag + "_target.csv"), env.grid(),
                    target_density(e.params.target, env.grid()), t_final, mu);
    returns.push_back(e.controlled.episode_return);
  }
  summary["checkpoint_episode"] = trainer.episode();
  summary["returns"] = returns;
  summary["mean_return"] = s.mean_return;
  summary["median_return"] = s.median_return;
  summary["mean_final_mse"] = s.mean_final_mse;
  summary["mean_uncontrolled_mse"] = s.mean_baseline_mse;
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  log << "mean_return " << num(s.mean_return) << "\nmedian_return " << num(s.median_return)
      << "\nmean_final_mse " << num(s.mean_final_mse) << "\nmean_uncontrolled_mse "
      << num(s.mean_baseline_mse) << "\noutput " << dir.string() << '\n';
  return s;
}

void cmd_export(const fs::path& run_dir, std::ostream& log) {
  if (!fs::is_directory(run_dir)) throw IoError("run directory not found: " + run_dir.string());
  std::vector<fs::path> runs;
  if (fs::exists(run_dir / "metrics.csv")) {
    runs.push_back(run_dir);
  } else {
    for (const auto& entry : fs::directory_iterator(run_dir)) {
      const std::string name = entry.path().filename().string();
      if (entry.is_directory() && name.rfind("seed_", 0) == 0 &&
          fs::exists(entry.path() / "metrics.csv")) {
        runs.push_back(entry.path());
      }
    }
    std::sort(runs.begin(), runs.end());
  }
  if (runs.empty()) throw IoError("no metrics.csv found under " + run_dir.string());

  std::map<std::size_t, std::vector<double>> train;
  std::map<std::size_t, std::vector<double>> eval;
  for (const fs::path& r : runs) {
    for (const MetricRow& row : read_metric_log(r / "metrics.csv")) {
      (row.mode == "eval" ? eval : train)[row.episode].push_back(row.mean_return);
    }
  }
  auto write = [&](const fs::path& path, const std::map<std::size_t, std::vector<double>>& data) {
    std::string text = "episode,p25,p50,p75\n";
    for (const auto& [episode, values] : data) {
      text += std::to_string(episode) + ',' + num(quantile(values, 0.25)) + ',' +
              num(quantile(values, 0.5)) + ',' + num(quantile(values, 0.75)) + '\n';
    }
    write_text_file(path, text);
  };
  write(run_dir / "export_returns.csv", train);
  write(run_dir / "export_eval.csv", eval);
  log << "aggregated " << runs.size() << " run(s) into " << (run_dir / "export_returns.csv").string()
      << " and " << (run_dir / "export_eval.csv").string() << '\n';
}

}  // namespace hypemarl
