#include "foilrl/ppo.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "foilrl/errors.hpp"
#include "foilrl/parallel.hpp"

namespace foilrl {

PpoConfig PpoConfig::from_scratch() { return PpoConfig{}; }

PpoConfig PpoConfig::pretrain() {
  PpoConfig c;
  c.n_epochs = 10;
  c.clip_range = 0.6;
  c.entropy_coef = 0.0;
  return c;
}

PpoConfig PpoConfig::finetune() {
  PpoConfig c;
  c.n_steps = 512;
  c.clip_range = 0.2;
  c.entropy_coef = 0.005;
  return c;
}

const std::vector<std::string>& PpoConfig::preset_names() {
  static const std::vector<std::string> names = {"from-scratch", "pretrain", "finetune"};
  return names;
}

PpoConfig PpoConfig::preset(const std::string& name) {
  if (name == "from-scratch") return from_scratch();
  if (name == "pretrain") return pretrain();
  if (name == "finetune") return finetune();
  throw InvalidParams("unknown PPO preset '" + name + "'");
}

void PpoConfig::validate() const {
  FOILRL_REQUIRE(total_timesteps >= 0, InvalidParams, "total_timesteps must be >= 0");
  FOILRL_REQUIRE(learning_rate > 0.0, InvalidParams, "learning_rate must be positive");
  FOILRL_REQUIRE(n_steps > 0 && batch_size > 0 && n_epochs > 0 && n_envs > 0, InvalidParams,
                 "n_steps, batch_size, n_epochs and n_envs must be positive");
  FOILRL_REQUIRE(gamma > 0.0 && gamma <= 1.0, InvalidParams, "gamma must be in (0, 1]");
  FOILRL_REQUIRE(gae_lambda >= 0.0 && gae_lambda <= 1.0, InvalidParams, "gae_lambda must be in [0, 1]");
  FOILRL_REQUIRE(clip_range > 0.0, InvalidParams, "clip_range must be positive");
  FOILRL_REQUIRE(entropy_coef >= 0.0 && value_coef >= 0.0, InvalidParams,
                 "loss coefficients must be >= 0");
  FOILRL_REQUIRE(max_grad_norm > 0.0, InvalidParams, "max_grad_norm must be positive");
  FOILRL_REQUIRE((static_cast<std::int64_t>(n_steps) * n_envs) % batch_size == 0, InvalidParams,
                 "batch_size must divide n_steps * n_envs");
}

void RolloutBuffer::allocate(int steps, int envs) {
  n_steps = steps;
  n_envs = envs;
  const Eigen::Index n = static_cast<Eigen::Index>(steps) * envs;
  observations.setZero(kObservationSize, n);
  actions.setZero(kActionSize, n);
  log_probs.setZero(n);
  rewards.setZero(n);
  values.setZero(n);
  dones.assign(static_cast<std::size_t>(n), false);
  terminal_values.setZero(n);
  last_values.setZero(envs);
  advantages.setZero(n);
  returns.setZero(n);
  episode_rewards.clear();
}

void compute_gae(RolloutBuffer& buf, double gamma, double gae_lambda) {
  const Eigen::Index n = static_cast<Eigen::Index>(buf.size());
  FOILRL_REQUIRE(buf.rewards.size() == n && buf.values.size() == n &&
                     buf.terminal_values.size() == n && buf.last_values.size() == buf.n_envs &&
                     static_cast<Eigen::Index>(buf.dones.size()) == n,
                 ShapeError, "compute_gae: buffer not populated");
  buf.advantages.resize(n);
  for (int e = 0; e < buf.n_envs; ++e) {
    double carry = 0.0;
    for (int t = buf.n_steps - 1; t >= 0; --t) {
      const Eigen::Index i = static_cast<Eigen::Index>(e) * buf.n_steps + t;
      double next_value;
      if (buf.dones[i]) {
        next_value = buf.terminal_values(i);
        carry = 0.0;
      } else {
        next_value = t + 1 < buf.n_steps ? buf.values(i + 1) : buf.last_values(e);
      }
      const double delta = buf.rewards(i) + gamma * next_value - buf.values(i);
      carry = delta + gamma * gae_lambda * carry;
      buf.advantages(i) = carry;
    }
  }
  buf.returns = buf.advantages + buf.values;
}

Vector normalize_advantages(const Vector& adv) {
  if (adv.size() == 0) return adv;
  const double mean = adv.mean();
  const double var = (adv.array() - mean).square().mean();
  return (adv.array() - mean) / (std::sqrt(var) + 1e-8);
}

std::vector<EnvSlot> make_env_slots(const EnvConfig& cfg, int n_envs, std::uint64_t seed,
                                    const AeroSolver& solver) {
  FOILRL_REQUIRE(n_envs > 0, InvalidParams, "n_envs must be positive");
  std::vector<EnvSlot> slots;
  slots.reserve(n_envs);
  for (int e = 0; e < n_envs; ++e) {
    AirfoilEnv env = solver ? AirfoilEnv(cfg, solver) : AirfoilEnv(cfg);
    slots.push_back(EnvSlot{std::move(env), Rng(derive_seed(seed, 100 + e))});
  }
  return slots;
}

namespace {

Vector to_vector(const Observation& o) { return Eigen::Map<const Vector>(o.data(), kObservationSize); }

}  // namespace

void collect_rollout(std::vector<EnvSlot>& slots, const Agent& agent, int n_steps,
                     RolloutBuffer& buf, int n_workers) {
  FOILRL_REQUIRE(n_steps > 0 && !slots.empty(), InvalidParams, "collect_rollout: empty rollout");
  buf.allocate(n_steps, static_cast<int>(slots.size()));
  std::vector<std::vector<double>> finished(slots.size());

  parallel_for(slots.size(), n_workers, [&](std::size_t e) {
    EnvSlot& slot = slots[e];
    for (int t = 0; t < n_steps; ++t) {
      const Eigen::Index i = static_cast<Eigen::Index>(e) * n_steps + t;
      if (slot.needs_reset) {
        slot.env.reset(slot.rng);
        slot.needs_reset = false;
        slot.episode_reward = 0.0;
      }
      const Vector obs = to_vector(slot.env.observe());
      const PolicySample s = gaussian_policy(agent.act_mean(obs), agent.log_std, slot.rng);
      buf.observations.col(i) = obs;
      buf.actions.col(i) = s.action;
      buf.log_probs(i) = s.log_prob;
      buf.values(i) = agent.value(obs);

      Action a;
      for (int k = 0; k < kActionSize; ++k) a[k] = s.action(k);
      const StepOutcome out = slot.env.step(a);
      buf.rewards(i) = out.reward;
      slot.episode_reward += out.reward;
      if (out.terminated) {
        buf.dones[i] = true;
        if (out.truncated()) {
          buf.terminal_values(i) =
              agent.value(to_vector(normalize_observation(out.observation, slot.env.config().bounds)));
        }
        finished[e].push_back(slot.episode_reward);
        slot.needs_reset = true;
      }
    }
    buf.last_values(e) = slot.needs_reset ? 0.0 : agent.value(to_vector(slot.env.observe()));
  });

  for (const auto& f : finished) buf.episode_rewards.insert(buf.episode_rewards.end(), f.begin(), f.end());
}

AgentGrads compute_ppo_gradients(const Agent& agent, const RolloutBuffer& buf, const Vector& adv,
                                 const std::vector<std::size_t>& idx, const PpoConfig& cfg,
                                 const FreezeMask& mask, UpdateStats& stats, double* max_ratio_dev) {
  const Eigen::Index b = static_cast<Eigen::Index>(idx.size());
  FOILRL_REQUIRE(b > 0, InvalidParams, "compute_ppo_gradients: empty minibatch");
  Matrix obs(kObservationSize, b);
  for (Eigen::Index j = 0; j < b; ++j) obs.col(j) = buf.observations.col(static_cast<Eigen::Index>(idx[j]));

  MlpCache actor_cache, critic_cache;
  const Matrix mean = agent.actor.forward_batch(obs, &actor_cache);
  const Matrix value = agent.critic.forward_batch(obs, &critic_cache);

  const Eigen::Index d = agent.log_std.size();
  Vector s(d), inv_var(d);
  std::vector<bool> s_active(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    s(k) = clamp_log_std(agent.log_std(k));
    s_active[k] = agent.log_std(k) > kLogStdMin && agent.log_std(k) < kLogStdMax;
    inv_var(k) = std::exp(-2.0 * s(k));
  }
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const double log_norm = -s.sum() - d * half_log_2pi;

  AgentGrads g = agent.zero_grads();
  Matrix d_mean = Matrix::Zero(d, b);
  Matrix d_value(1, b);
  double policy_loss = 0.0, value_loss = 0.0, kl = 0.0, clipped = 0.0, max_dev = 0.0;
  const double inv_b = 1.0 / static_cast<double>(b);

  for (Eigen::Index j = 0; j < b; ++j) {
    const Eigen::Index i = static_cast<Eigen::Index>(idx[j]);
    const Vector diff = buf.actions.col(i) - mean.col(j);
    const double logp = log_norm - 0.5 * (diff.array().square() * inv_var.array()).sum();
    const double log_ratio = logp - buf.log_probs(i);
    const double ratio = std::exp(log_ratio);
    const double a = adv(i);
    const double unclipped = ratio * a;
    const double clipped_term = std::clamp(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range) * a;
    policy_loss -= std::min(unclipped, clipped_term) * inv_b;
    kl += ((ratio - 1.0) - log_ratio) * inv_b;
    max_dev = std::max(max_dev, std::abs(ratio - 1.0));
    if (std::abs(ratio - 1.0) > cfg.clip_range) clipped += inv_b;

    if (unclipped <= clipped_term) {
      // d(-rho A / B) / d logp
      const double dlogp = -unclipped * inv_b;
      d_mean.col(j) = dlogp * (diff.array() * inv_var.array()).matrix();
      for (Eigen::Index k = 0; k < d; ++k) {
        if (s_active[k]) g.log_std(k) += dlogp * (diff(k) * diff(k) * inv_var(k) - 1.0);
      }
    }

    const double err = buf.returns(i) - value(0, j);
    value_loss += err * err * inv_b;
    d_value(0, j) = -2.0 * cfg.value_coef * err * inv_b;
  }

  const double entropy = gaussian_entropy(agent.log_std);
  for (Eigen::Index k = 0; k < d; ++k) {
    if (s_active[k]) g.log_std(k) -= cfg.entropy_coef;
  }
  if (mask.log_std_frozen()) g.log_std.setZero();

  agent.actor.backward(actor_cache, d_mean, g.actor, mask.actor);
  agent.critic.backward(critic_cache, d_value, g.critic, mask.critic);

  stats.policy_loss += policy_loss;
  stats.value_loss += value_loss;
  stats.entropy += entropy;
  stats.approx_kl += kl;
  stats.clip_fraction += clipped;
  ++stats.minibatches;
  if (max_ratio_dev) *max_ratio_dev = max_dev;
  return g;
}

UpdateStats ppo_update(Agent& agent, AdamState& adam, const FreezeMask& mask,
                       const RolloutBuffer& buf, const PpoConfig& cfg, Rng& rng) {
  const std::size_t n = buf.size();
  FOILRL_REQUIRE(n > 0 && n % static_cast<std::size_t>(cfg.batch_size) == 0, InvalidParams,
                 "ppo_update: batch_size must divide the buffer size");
  const Vector adv = normalize_advantages(buf.advantages);
  AdamConfig acfg;
  acfg.learning_rate = cfg.learning_rate;

  UpdateStats stats;
  double grad_norm_sum = 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + cfg.batch_size);
      double dev = 0.0;
      const double loss_before = stats.policy_loss + stats.value_loss;
      AgentGrads g = compute_ppo_gradients(agent, buf, adv, idx, cfg, mask, stats, &dev);
      if (stats.minibatches == 1) stats.first_ratio_max_dev = dev;
      const double norm2 = g.squared_norm();
      if (!std::isfinite(stats.policy_loss + stats.value_loss - loss_before) || !std::isfinite(norm2)) {
        throw TrainingDiverged("non-finite PPO loss or gradient");
      }
      const double norm = std::sqrt(norm2);
      grad_norm_sum += norm;
      if (norm > cfg.max_grad_norm) g.scale(cfg.max_grad_norm / (norm + 1e-6));
      agent.adam_step(g, adam, acfg, mask);
    }
  }
  const double m = static_cast<double>(stats.minibatches);
  stats.policy_loss /= m;
  stats.value_loss /= m;
  stats.entropy /= m;
  stats.approx_kl /= m;
  stats.clip_fraction /= m;
  stats.grad_norm = grad_norm_sum / m;
  return stats;
}

std::string train_log_header() {
  return "update,timesteps,episodes,mean_episode_reward,policy_loss,value_loss,entropy,approx_kl,"
         "clip_fraction,grad_norm,solver_calls";
}

std::string format_train_log_row(const TrainLogRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%lld,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%lld", r.update,
                static_cast<long long>(r.timesteps), r.episodes, r.mean_episode_reward,
                r.stats.policy_loss, r.stats.value_loss, r.stats.entropy, r.stats.approx_kl,
                r.stats.clip_fraction, r.stats.grad_norm, static_cast<long long>(r.solver_calls));
  return buf;
}

TrainResult train(const EnvConfig& env_cfg, const PpoConfig& cfg, std::uint64_t seed,
                  const TrainOptions& opts, const AgentCheckpoint* init) {
  env_cfg.validate();
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  TrainResult result;
  if (init) {
    result.checkpoint = *init;
  } else {
    Rng init_rng(derive_seed(seed, 0));
    result.checkpoint = make_checkpoint(Agent(default_hidden_sizes(), init_rng));
  }
  AgentCheckpoint& ck = result.checkpoint;
  for (auto& [k, v] : opts.meta.items()) ck.meta[k] = v;

  std::ofstream log;
  if (!opts.log_csv.empty()) {
    const std::filesystem::path p(opts.log_csv);
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    log.open(p);
    if (!log) throw IoError("cannot write training log '" + opts.log_csv + "'");
    log << train_log_header() << "\n";
  }

  Rng update_rng(derive_seed(seed, 1));
  std::vector<EnvSlot> slots;
  if (cfg.total_timesteps > 0) slots = make_env_slots(env_cfg, cfg.n_envs, seed, opts.solver);
  RolloutBuffer buf;
  std::deque<double> recent;
  int episodes = 0;
  int update = 0;

  while (result.timesteps < cfg.total_timesteps) {
    collect_rollout(slots, ck.agent, cfg.n_steps, buf, opts.n_workers);
    result.timesteps += static_cast<std::int64_t>(buf.size());
    for (double r : buf.episode_rewards) {
      recent.push_back(r);
      if (recent.size() > 100) recent.pop_front();
      ++episodes;
    }
    compute_gae(buf, cfg.gamma, cfg.gae_lambda);

    TrainLogRow row;
    try {
      row.stats = ppo_update(ck.agent, ck.adam, ck.mask, buf, cfg, update_rng);
    } catch (const TrainingDiverged&) {
      if (!opts.checkpoint_out.empty()) save_checkpoint(ck, opts.checkpoint_out + ".diverged");
      throw;
    }
    ++update;
    ck.timesteps += static_cast<std::int64_t>(buf.size());

    row.update = update;
    row.timesteps = result.timesteps;
    row.episodes = episodes;
    row.mean_episode_reward =
        recent.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(recent.size());
    std::int64_t calls = 0;
    for (const auto& s : slots) calls += s.env.solver_calls();
    row.solver_calls = calls;
    result.solver_calls = calls;
    result.log.push_back(row);
    if (log) log << format_train_log_row(row) << "\n" << std::flush;
    if (opts.on_update) opts.on_update(row);
    if (opts.snapshot_every > 0 && update % opts.snapshot_every == 0 && !opts.checkpoint_out.empty()) {
      save_checkpoint(ck, opts.checkpoint_out + ".u" + std::to_string(update));
    }
  }

  if (!init || result.timesteps > 0) {
    ck.meta["sigma"] = env_cfg.sigma;
    ck.meta["fidelity"] = to_string(env_cfg.solver.fidelity);
    ck.meta["nominal_cost_ms"] = env_cfg.solver.nominal_cost_ms;
    ck.meta["solver_calls"] = result.solver_calls;
    ck.meta["run_timesteps"] = result.timesteps;
  }
  if (!opts.checkpoint_out.empty()) save_checkpoint(ck, opts.checkpoint_out);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace foilrl
