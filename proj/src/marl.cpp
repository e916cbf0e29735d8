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

#include "hypemarl/marl.hpp"

#include <malloc.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "hypemarl/error.hpp"

namespace hypemarl {

// ---------------------------------------------------------------------------
// Agent stacks

Matrix AgentStack::episode_conditions(const Vector& mu) const {
  if (static_cast<std::size_t>(mu.size()) != param_dim) {
    throw ConfigError("expected " + std::to_string(param_dim) + " system parameters");
  }
  if (global()) return mu;
  const auto n = static_cast<Eigen::Index>(agents);
  if (!encodings) return mu.replicate(1, n);
  const Matrix& pe = encodings->matrix();
  Matrix out(pe.rows() + mu.size(), n);
  out.topRows(pe.rows()) = pe;
  out.bottomRows(mu.size()) = mu.replicate(1, n);
  return out;
}

Matrix AgentStack::batch_conditions(const std::vector<std::size_t>& agent_ids,
                                    const Matrix& mus) const {
  if (!encodings) return mus;
  const Matrix& pe = encodings->matrix();
  Matrix out(pe.rows() + mus.rows(), mus.cols());
  for (Eigen::Index b = 0; b < mus.cols(); ++b) {
    out.col(b).head(pe.rows()) = pe.col(static_cast<Eigen::Index>(agent_ids[b]));
  }
  out.bottomRows(mus.rows()) = mus;
  return out;
}

JointPolicy AgentStack::policy(const Vector& mu) const {
  auto bound = learner->bind_policy(episode_conditions(mu));
  if (global()) {
    return [bound = std::move(bound)](const Vector& y) -> Vector { return bound(y).col(0); };
  }
  return [bound = std::move(bound)](const Vector& y) -> Vector {
    return bound(y.transpose()).row(0).transpose();
  };
}

AgentStack variant_select(const RunConfig& cfg, std::size_t agents, std::size_t param_dim,
                          Rng& rng) {
  AgentStack s;
  s.variant = cfg.variant;
  s.agents = agents;
  s.param_dim = param_dim;
  const std::size_t state = s.state_dim();
  const std::size_t action = s.action_dim();
  if (uses_hypernet(cfg.variant)) {
    s.encodings = std::make_shared<EncodingTable>(
        layout_positions(cfg.grid_rows, cfg.grid_cols, cfg.layout), cfg.encoding);
    HyperSpec actor;
    actor.encoding = cfg.encoding;
    actor.param_dim = param_dim;
    actor.hidden_dims = cfg.networks.hyper_hidden;
    actor.target = MlpSpec{state, cfg.networks.main_hidden, action, Activation::relu,
                           Activation::tanh};
    HyperSpec critic = actor;
    critic.target = MlpSpec{state + action, cfg.networks.main_hidden, 1, Activation::relu,
                            Activation::identity};
    s.actor = std::make_shared<HyperNet>(actor);
    s.critic = std::make_shared<HyperNet>(critic);
  } else {
    const auto& hidden = cfg.networks.plain_hidden;
    s.actor = std::make_shared<PlainNet>(
        MlpSpec{state + param_dim, hidden, action, Activation::relu, Activation::tanh}, param_dim);
    s.critic = std::make_shared<PlainNet>(
        MlpSpec{state + action + param_dim, hidden, 1, Activation::relu, Activation::identity},
        param_dim);
  }
  s.learner = std::make_unique<Td3Learner>(s.actor, s.critic, cfg.env_params.action,
                                           cfg.td3_hyper(), rng);
  return s;
}

// ---------------------------------------------------------------------------
// Episodes

EpisodeResult run_episode(const DensityEnv& env, const EpisodeParams& ep,
                          const JointPolicy& policy, double sigma, bool global, Rng& rng,
                          bool record) {
  DensityEnv::Episode episode = env.reset(ep);
  const std::size_t steps = env.steps();
  const auto n = static_cast<Eigen::Index>(env.agents());
  const Vector mu = episode.mu.values;
  const ActionBounds& bounds = env.params().action;
  EpisodeResult out;
  Vector totals = Vector::Zero(n);
  if (record) out.transitions.reserve(global ? steps : steps * env.agents());
  for (std::size_t t = 0; t < steps; ++t) {
    const Vector y = episode.state.y;
    const Vector u = explore(policy(y), sigma, bounds, rng);
    const Vector r = env.step(episode, u);
    totals += r;
    out.step_rewards.push_back(r.mean());
    if (!record) continue;
    if (global) {
      out.transitions.push_back(LocalTransition{0, y, u, r.mean(), episode.state.y, mu});
      continue;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      out.transitions.push_back(LocalTransition{static_cast<std::size_t>(i),
                                                y.segment(i, 1),
                                                u.segment(i, 1),
                                                r[i],
                                                episode.state.y.segment(i, 1),
                                                mu});
    }
  }
  out.episode_return = totals.mean();
  out.final_state = episode.state.y;
  out.final_mse = (episode.state.y - episode.target).squaredNorm() / static_cast<double>(n);
  return out;
}

std::vector<EpisodeParams> eval_tuples(const DensityEnv& env, std::uint64_t seed,
                                       std::size_t count) {
  Rng rng(seed);
  std::vector<EpisodeParams> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(env.sample(rng));
  return out;
}

namespace {

void check_mass_identity(const DensityEnv& env, const EpisodeParams& ep, const JointPolicy& policy) {
  DensityEnv::Episode episode = env.reset(ep);
  const Vector areas = env.grid().cell_areas();
  for (std::size_t t = 0; t < env.steps(); ++t) {
    const Vector y = episode.state.y;
    const Vector u = policy(y).cwiseMax(env.params().action.low).cwiseMin(env.params().action.high);
    env.step(episode, u);
    const double drift = areas.dot(episode.state.y) - areas.dot(y) - env.params().dt * areas.dot(u);
    if (std::abs(drift) > 1e-10) {
      throw NumericalError("vacuum mass identity violated by " + std::to_string(drift) +
                           " at step " + std::to_string(t));
    }
  }
}

}  // namespace

EvalSummary evaluate(const DensityEnv& env, const AgentStack& stack,
                     const std::vector<EpisodeParams>& tuples) {
  EvalSummary s;
  Rng unused(0);  // sigma is zero, so no draws happen
  const JointPolicy zero = [n = env.agents()](const Vector&) -> Vector {
    return Vector::Zero(static_cast<Eigen::Index>(n));
  };
  std::vector<double> returns;
  for (const EpisodeParams& ep : tuples) {
    const JointPolicy pi = stack.policy(env.system_params(ep).values);
    EvalEpisode e;
    e.params = ep;
    e.controlled = run_episode(env, ep, pi, 0.0, stack.global(), unused, false);
    e.uncontrolled = run_episode(env, ep, zero, 0.0, stack.global(), unused, false);
    if (env.kind() == EnvKind::vacuum) check_mass_identity(env, ep, pi);
    returns.push_back(e.controlled.episode_return);
    s.mean_return += e.controlled.episode_return;
    s.mean_final_mse += e.controlled.final_mse;
    s.mean_baseline_mse += e.uncontrolled.final_mse;
    s.episodes.push_back(std::move(e));
  }
  if (!tuples.empty()) {
    const double k = static_cast<double>(tuples.size());
    s.mean_return /= k;
    s.mean_final_mse /= k;
    s.mean_baseline_mse /= k;
    s.median_return = quantile(returns, 0.5);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Schedule

bool is_real_episode(const TrainSchedule& schedule, Variant variant, std::size_t e) {
  if (variant != Variant::mb_hypemarl || schedule.surrogate_ratio == 0) return true;
  if (e < schedule.warmup) return true;
  return (e - schedule.warmup) % (schedule.surrogate_ratio + 1) == 0;
}

std::size_t count_real_episodes(const TrainSchedule& schedule, Variant variant,
                                std::size_t episodes) {
  std::size_t n = 0;
  for (std::size_t e = 0; e < episodes; ++e) n += is_real_episode(schedule, variant, e) ? 1 : 0;
  return n;
}

DensityEnv make_env(const RunConfig& cfg) {
  return DensityEnv(cfg.env, Grid2D(cfg.grid_rows, cfg.grid_cols), cfg.env_params);
}

// ---------------------------------------------------------------------------
// Trainer

namespace {

NoiseSchedule make_noise(const RunConfig& cfg) {
  NoiseSchedule n;
  const double hw = cfg.env_params.action.half_width();
  n.initial = cfg.schedule.noise_initial * hw;
  n.final = cfg.schedule.noise_final * hw;
  n.warmup = cfg.schedule.warmup;
  n.episodes = cfg.schedule.episodes;
  return n;
}

RunConfig checked(RunConfig cfg) {
  cfg.validate();
  // Keep the multi-megabyte gradient buffers in the heap instead of
  // mapping and unmapping them on every update.
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
  });
  return cfg;
}

}  // namespace

Trainer::Trainer(RunConfig cfg, std::uint64_t seed) : Trainer(Restore{}, std::move(cfg), seed) {}

Trainer::Trainer(Restore, RunConfig cfg, std::uint64_t seed)
    : cfg_(checked(std::move(cfg))),
      seed_(seed),
      rng_(seed),
      env_(make_env(cfg_)),
      stack_(variant_select(cfg_, env_.agents(), env_.param_dim(), rng_)),
      noise_(make_noise(cfg_)) {
  const std::size_t sd = stack_.state_dim();
  real_ = ReplayBuffer(cfg_.schedule.buffer_capacity, sd, sd, env_.param_dim());
  if (cfg_.variant == Variant::mb_hypemarl) {
    synthetic_ = ReplayBuffer(cfg_.schedule.buffer_capacity, sd, sd, env_.param_dim());
    surrogate_.emplace(sd, sd, env_.param_dim(), cfg_.surrogate, rng_);
  }
}

double Trainer::sigma(std::size_t e) const { return noise_.at(e); }

void Trainer::add_real(const std::vector<LocalTransition>& ts) {
  for (const LocalTransition& t : ts) {
    real_.add(t);
    max_abs_real_ = std::max({max_abs_real_, t.state.cwiseAbs().maxCoeff(),
                              t.next_state.cwiseAbs().maxCoeff()});
  }
}

void Trainer::append_batch(const ReplayBuffer& buf, const std::vector<std::size_t>& slots,
                           TransitionBatch& batch, Eigen::Index offset,
                           std::vector<std::size_t>& agent_ids) const {
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const std::size_t s = slots[k];
    const Eigen::Index b = offset + static_cast<Eigen::Index>(k);
    batch.state.col(b) = buf.state(s);
    batch.action.col(b) = buf.action(s);
    batch.reward[b] = buf.reward(s);
    batch.next_state.col(b) = buf.next_state(s);
    batch.condition.col(b) = buf.mu(s);
    agent_ids[static_cast<std::size_t>(b)] = buf.agent(s);
  }
}

TransitionBatch Trainer::sample_batch(bool synthetic_episode) {
  const std::size_t n = cfg_.td3.batch_size;
  std::size_t from_real = synthetic_episode ? 0 : n;
  const double f = cfg_.schedule.real_fraction;
  if (cfg_.variant == Variant::mb_hypemarl && f >= 0.0 && !synthetic_.empty()) {
    from_real = static_cast<std::size_t>(std::lround(f * static_cast<double>(n)));
  }
  if (real_.empty()) from_real = 0;
  const std::size_t from_synthetic = n - from_real;
  if (from_synthetic > 0 && synthetic_.empty()) throw UsageError("synthetic buffer is empty");

  const auto sd = static_cast<Eigen::Index>(stack_.state_dim());
  const auto nb = static_cast<Eigen::Index>(n);
  TransitionBatch batch;
  batch.state.resize(sd, nb);
  batch.action.resize(sd, nb);
  batch.reward.resize(nb);
  batch.next_state.resize(sd, nb);
  batch.condition.resize(static_cast<Eigen::Index>(env_.param_dim()), nb);
  std::vector<std::size_t> agent_ids(n);
  if (from_real > 0) append_batch(real_, real_.sample_slots(from_real, rng_), batch, 0, agent_ids);
  if (from_synthetic > 0) {
    append_batch(synthetic_, synthetic_.sample_slots(from_synthetic, rng_), batch,
                 static_cast<Eigen::Index>(from_real), agent_ids);
  }
  batch.condition = stack_.batch_conditions(agent_ids, batch.condition);
  return batch;
}

double Trainer::train_surrogate(std::size_t steps) {
  SurrogateModel& model = *surrogate_;
  const std::size_t n = model.config().batch_size;
  const auto sd = static_cast<Eigen::Index>(stack_.state_dim());
  double total = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    TransitionBatch batch;
    batch.state.resize(sd, static_cast<Eigen::Index>(n));
    batch.action.resize(sd, static_cast<Eigen::Index>(n));
    batch.reward.resize(static_cast<Eigen::Index>(n));
    batch.next_state.resize(sd, static_cast<Eigen::Index>(n));
    batch.condition.resize(static_cast<Eigen::Index>(env_.param_dim()), static_cast<Eigen::Index>(n));
    std::vector<std::size_t> ids(n);
    append_batch(real_, real_.sample_slots(n, rng_), batch, 0, ids);
    total += model.train_step(batch);
    ++surrogate_updates_;
  }
  return steps > 0 ? total / static_cast<double>(steps) : kNoValue;
}

std::vector<MetricRow> Trainer::step() {
  if (finished()) throw UsageError("training schedule already complete");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t e = episode_;
  const TrainSchedule& sch = cfg_.schedule;
  const bool real = is_real_episode(sch, cfg_.variant, e);
  const bool training = e >= sch.warmup;
  const double sig = sigma(e);

  MetricRow row;
  row.episode = e;
  row.mode = real ? "real" : "surrogate";

  if (real) {
    const EpisodeParams ep = env_.sample(rng_);
    const JointPolicy pi = stack_.policy(env_.system_params(ep).values);
    EpisodeResult res = run_episode(env_, ep, pi, sig, stack_.global(), rng_);
    add_real(res.transitions);
    ++real_episodes_;
    row.mean_return = res.episode_return;
    if (training && surrogate_) {
      std::size_t steps = sch.surrogate_updates > 0 ? sch.surrogate_updates
                                                    : sch.updates(env_.steps());
      if (!surrogate_ready_) steps += surrogate_->config().pretrain_steps;
      row.surrogate_loss = train_surrogate(steps);
      surrogate_ready_ = true;
    }
  } else {
    // Fresh mu and a real initial condition; only the surrogate advances it.
    const EpisodeParams ep = env_.sample(rng_);
    const Vector mu = env_.system_params(ep).values;
    const Vector y0 = initial_density(ep.mu0, env_.grid()).y;
    const Vector target = target_density(ep.target, env_.grid()).y;
    auto policy = stack_.learner->bind_policy(stack_.episode_conditions(mu));
    SurrogateRollout roll =
        surrogate_rollout(y0, policy, *surrogate_, target, mu, env_.steps(), sig,
                          env_.params().action,
                          cfg_.surrogate.divergence_factor * max_abs_real_, rng_);
    for (const LocalTransition& t : roll.transitions) synthetic_.add(t);
    row.mean_return = roll.episode_return;
  }

  if (training) {
    const std::size_t g = sch.updates(env_.steps());
    double critic = 0.0;
    double actor = 0.0;
    std::size_t actor_count = 0;
    for (std::size_t k = 0; k < g; ++k) {
      if (!real && synthetic_.empty()) break;
      const TransitionBatch batch = sample_batch(!real);
      const Td3Learner::StepLosses l = stack_.learner->train_step(batch, rng_);
      critic += l.critic;
      if (l.actor) {
        actor += *l.actor;
        ++actor_count;
      }
      ++agent_updates_;
    }
    if (g > 0) row.critic_loss = critic / static_cast<double>(g);
    if (actor_count > 0) row.actor_loss = actor / static_cast<double>(actor_count);
  }

  ++episode_;
  row.real_episodes = real_episodes_;
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::vector<MetricRow> rows{row};

  if (episode_ % sch.eval_period == 0 || finished()) {
    const auto eval_start = std::chrono::steady_clock::now();
    last_eval_ = evaluate_now(sch.eval_episodes);
    MetricRow ev;
    ev.episode = e;
    ev.mode = "eval";
    ev.mean_return = last_eval_->mean_return;
    ev.real_episodes = real_episodes_;
    ev.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - eval_start).count();
    rows.push_back(ev);
  }
  return rows;
}

void Trainer::run(std::size_t until, const std::function<void(const MetricRow&)>& on_row) {
  while (!finished() && episode_ < until) {
    for (const MetricRow& r : step()) {
      if (on_row) on_row(r);
    }
  }
}

EvalSummary Trainer::evaluate_now(std::size_t count) const {
  return evaluate(env_, stack_, eval_tuples(env_, cfg_.schedule.eval_seed, count));
}

}  // namespace hypemarl
