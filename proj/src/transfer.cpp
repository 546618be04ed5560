#include "foilrl/transfer.hpp"

#include "foilrl/errors.hpp"

namespace foilrl {

namespace {

constexpr double kPolicyHeadGain = 0.01;
constexpr double kValueHeadGain = 1.0;

}  // namespace

TlStrategy strategy_from_int(int n) {
  FOILRL_REQUIRE(n >= 1 && n <= 4, InvalidParams, "transfer strategy must be 1, 2, 3 or 4");
  return static_cast<TlStrategy>(n);
}

int to_int(TlStrategy s) { return static_cast<int>(s); }

const char* to_string(TlStrategy s) {
  switch (s) {
    case TlStrategy::share_all: return "share_all";
    case TlStrategy::share_all_but_last: return "share_all_but_last";
    case TlStrategy::freeze_all_but_last: return "freeze_all_but_last";
    case TlStrategy::share_all_but_last_freeze: return "share_all_but_last_freeze";
  }
  return "unknown";
}

AgentCheckpoint apply_strategy(const AgentCheckpoint& source, TlStrategy strategy, Rng& rng) {
  const Agent& src = source.agent;
  FOILRL_REQUIRE(src.actor.num_layers() > 0 && src.critic.num_layers() > 0, ShapeError,
                 "apply_strategy: empty source networks");
  FOILRL_REQUIRE(src.actor.input_size() == kObservationSize && src.actor.output_size() == kActionSize &&
                     src.critic.input_size() == kObservationSize && src.critic.output_size() == 1 &&
                     src.log_std.size() == kActionSize,
                 ShapeError, "apply_strategy: source architecture does not match the environment");

  AgentCheckpoint out;
  out.agent = src;
  out.timesteps = source.timesteps;
  out.meta = source.meta;
  out.meta["transfer_strategy"] = to_int(strategy);

  const std::size_t na = src.actor.num_layers();
  const std::size_t nc = src.critic.num_layers();
  const bool reinit = strategy == TlStrategy::share_all_but_last ||
                      strategy == TlStrategy::share_all_but_last_freeze;
  const bool freeze = strategy == TlStrategy::freeze_all_but_last ||
                      strategy == TlStrategy::share_all_but_last_freeze;

  if (reinit) {
    out.agent.actor.init_layer_orthogonal(na - 1, rng, kPolicyHeadGain);
    out.agent.log_std.setZero();
    out.agent.critic.init_layer_orthogonal(nc - 1, rng, kValueHeadGain);
  }
  out.mask = FreezeMask::none(na, nc);
  if (freeze) {
    for (std::size_t i = 0; i + 1 < na; ++i) out.mask.actor[i] = true;
    for (std::size_t i = 0; i + 1 < nc; ++i) out.mask.critic[i] = true;
  }
  if (strategy == TlStrategy::share_all && source.adam.m.size() == out.agent.fresh_adam().m.size()) {
    out.adam = source.adam;
  } else {
    out.adam = out.agent.fresh_adam();
  }
  return out;
}

double CostLedger::pretrain_seconds() const {
  return static_cast<double>(pretrain_steps) * pretrain_cost_ms / 1000.0;
}
double CostLedger::finetune_seconds() const {
  return static_cast<double>(finetune_steps) * finetune_cost_ms / 1000.0;
}
double CostLedger::total_seconds() const { return pretrain_seconds() + finetune_seconds(); }

nlohmann::json CostLedger::to_json() const {
  return {{"pretrain_steps", pretrain_steps},
          {"pretrain_cost_ms", pretrain_cost_ms},
          {"pretrain_seconds", pretrain_seconds()},
          {"pretrain_solver_calls", pretrain_solver_calls},
          {"finetune_steps", finetune_steps},
          {"finetune_cost_ms", finetune_cost_ms},
          {"finetune_seconds", finetune_seconds()},
          {"finetune_solver_calls", finetune_solver_calls},
          {"total_seconds", total_seconds()}};
}

double time_reduction(double tl_free_cost, double tl_cost) {
  FOILRL_REQUIRE(tl_free_cost > 0.0, InvalidParams, "time_reduction: baseline cost must be positive");
  return 100.0 * (tl_free_cost - tl_cost) / tl_free_cost;
}

FinetuneResult finetune(const AgentCheckpoint& source, TlStrategy strategy, const EnvConfig& env_cfg,
                        const PpoConfig& cfg, std::uint64_t seed, const TrainOptions& opts) {
  Rng rng(derive_seed(seed, 2));
  const AgentCheckpoint start = apply_strategy(source, strategy, rng);

  FinetuneResult out;
  TrainOptions o = opts;
  o.meta["transfer_strategy"] = to_int(strategy);
  out.train = train(env_cfg, cfg, seed, o, &start);

  out.ledger.pretrain_steps = source.meta.value("run_timesteps", source.timesteps);
  out.ledger.pretrain_cost_ms = source.meta.value("nominal_cost_ms", kLowFidelityCostMs);
  out.ledger.pretrain_solver_calls = source.meta.value("solver_calls", std::int64_t{0});
  out.ledger.finetune_steps = out.train.timesteps;
  out.ledger.finetune_cost_ms = env_cfg.solver.nominal_cost_ms;
  out.ledger.finetune_solver_calls = out.train.solver_calls;
  return out;
}

}  // namespace foilrl
