#pragma once

// PPO-clip: rollout collection, GAE, clipped surrogate updates and the
// training loop.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "foilrl/checkpoint.hpp"
#include "foilrl/env.hpp"
#include "foilrl/nn.hpp"

namespace foilrl {

struct PpoConfig {
  std::int64_t total_timesteps = 81920;
  double learning_rate = 2.5e-4;
  int n_steps = 2048;  // per environment and update
  int batch_size = 64;
  int n_epochs = 20;
  double gamma = 0.3;
  double gae_lambda = 0.95;
  double clip_range = 0.3;
  double entropy_coef = 0.001;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int n_envs = 1;

  static PpoConfig from_scratch();
  static PpoConfig pretrain();
  static PpoConfig finetune();
  // "from-scratch", "pretrain" or "finetune"; InvalidParams otherwise.
  static PpoConfig preset(const std::string& name);
  static const std::vector<std::string>& preset_names();

  void validate() const;
};

// Transitions of every environment, stored environment-major:
// index = env * n_steps + t.
struct RolloutBuffer {
  int n_steps = 0;
  int n_envs = 0;
  Matrix observations;  // 18 x N, normalized
  Matrix actions;       // 18 x N, raw Gaussian samples
  Vector log_probs;
  Vector rewards;
  Vector values;
  std::vector<bool> dones;
  // Value used in place of V(s_{t+1}) on done steps: V(s_T) on truncation,
  // zero on termination.
  Vector terminal_values;
  Vector last_values;  // V of the observation after the last step, per env
  Vector advantages;   // raw GAE, unnormalized
  Vector returns;      // advantages + values

  // Returns (sum of step rewards) of the episodes completed in this rollout.
  std::vector<double> episode_rewards;

  std::size_t size() const { return static_cast<std::size_t>(n_steps) * n_envs; }
  void allocate(int steps, int envs);
};

void compute_gae(RolloutBuffer& buf, double gamma, double gae_lambda);

// Mean 0, std 1 (population std + 1e-8).
Vector normalize_advantages(const Vector& adv);

// One environment slot of a vectorized rollout; persists across updates so
// episodes continue over rollout boundaries.
struct EnvSlot {
  AirfoilEnv env;
  Rng rng;
  bool needs_reset = true;
  double episode_reward = 0.0;
};

std::vector<EnvSlot> make_env_slots(const EnvConfig& cfg, int n_envs, std::uint64_t seed,
                                    const AeroSolver& solver = {});

void collect_rollout(std::vector<EnvSlot>& slots, const Agent& agent, int n_steps,
                     RolloutBuffer& buf, int n_workers = 1);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;  // before clipping
  double first_ratio_max_dev = 0.0;  // max |rho - 1| on the first minibatch
  int minibatches = 0;
};

// Loss gradients on the samples `idx` with normalized advantages `adv`.
// Frozen layers get zero gradient. `stats` receives the minibatch losses.
AgentGrads compute_ppo_gradients(const Agent& agent, const RolloutBuffer& buf, const Vector& adv,
                                 const std::vector<std::size_t>& idx, const PpoConfig& cfg,
                                 const FreezeMask& mask, UpdateStats& stats,
                                 double* max_ratio_dev = nullptr);

// n_epochs over shuffled minibatches with global gradient-norm clipping and
// Adam. Throws TrainingDiverged on a non-finite loss or gradient.
UpdateStats ppo_update(Agent& agent, AdamState& adam, const FreezeMask& mask,
                       const RolloutBuffer& buf, const PpoConfig& cfg, Rng& rng);

struct TrainLogRow {
  int update = 0;
  std::int64_t timesteps = 0;
  int episodes = 0;                  // completed so far
  double mean_episode_reward = 0.0;  // over the last 100 episodes; NaN before the first
  UpdateStats stats;
  std::int64_t solver_calls = 0;
};

struct TrainOptions {
  std::string checkpoint_out;  // final checkpoint; empty to skip writing
  std::string log_csv;         // training log; empty to skip writing
  int snapshot_every = 0;      // updates between snapshots, 0 for none
  int n_workers = 1;
  AeroSolver solver;           // overrides the env's solver when set
  std::function<void(const TrainLogRow&)> on_update;
  nlohmann::json meta = nlohmann::json::object();  // merged into the checkpoint meta
};

struct TrainResult {
  AgentCheckpoint checkpoint;
  std::vector<TrainLogRow> log;
  std::int64_t timesteps = 0;     // collected in this run
  std::int64_t solver_calls = 0;  // made in this run
  double wall_seconds = 0.0;
};

// Trains from a fresh agent, or continues `init` (weights, Adam state and
// freeze mask) when given.
TrainResult train(const EnvConfig& env_cfg, const PpoConfig& cfg, std::uint64_t seed,
                  const TrainOptions& opts = {}, const AgentCheckpoint* init = nullptr);

std::string train_log_header();
std::string format_train_log_row(const TrainLogRow& row);

}  // namespace foilrl
