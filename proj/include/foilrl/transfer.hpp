#pragma once

// Transfer from a low-fidelity-trained agent to high-fidelity fine-tuning.

#include <cstdint>
#include <string>

#include "foilrl/checkpoint.hpp"
#include "foilrl/ppo.hpp"

namespace foilrl {

enum class TlStrategy {
  share_all = 1,                   // copy everything, train everything
  share_all_but_last = 2,          // re-init last layers, train everything
  freeze_all_but_last = 3,         // copy everything, train only last layers
  share_all_but_last_freeze = 4,   // re-init last layers, train only them
};

TlStrategy strategy_from_int(int n);
int to_int(TlStrategy s);
const char* to_string(TlStrategy s);

// Builds the starting point of fine-tuning. The last layer of each network
// (with the log-std vector on the actor side) is what #2/#4 re-initialize
// and what #3/#4 leave trainable; masks apply to actor and critic alike.
// #1 keeps the source Adam moments, the others start fresh ones.
AgentCheckpoint apply_strategy(const AgentCheckpoint& source, TlStrategy strategy, Rng& rng);

// Nominal solver time: steps * per-call cost.
struct CostLedger {
  std::int64_t pretrain_steps = 0;
  double pretrain_cost_ms = kLowFidelityCostMs;
  std::int64_t finetune_steps = 0;
  double finetune_cost_ms = kHighFidelityCostMs;
  // Actual solver calls, resets included; reported, not used for the cost.
  std::int64_t pretrain_solver_calls = 0;
  std::int64_t finetune_solver_calls = 0;

  double pretrain_seconds() const;
  double finetune_seconds() const;
  double total_seconds() const;
  nlohmann::json to_json() const;
};

// 100 * (tl_free - tl) / tl_free; InvalidParams unless tl_free > 0.
double time_reduction(double tl_free_cost, double tl_cost);

struct FinetuneResult {
  TrainResult train;
  CostLedger ledger;
};

// Applies the strategy (with a dedicated RNG stream) and continues training
// on `env_cfg`. Zero timesteps under #1 return the source unchanged.
FinetuneResult finetune(const AgentCheckpoint& source, TlStrategy strategy, const EnvConfig& env_cfg,
                        const PpoConfig& cfg, std::uint64_t seed, const TrainOptions& opts = {});

}  // namespace foilrl
