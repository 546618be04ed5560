#pragma once

// Shape-optimization environment. The state is the 18 CST parameters, an
// action moves each of them by at most one step alpha(i), and the reward is
// the change of lambda * kappa * CL/CD between consecutive steps.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "foilrl/aero.hpp"
#include "foilrl/geometry.hpp"
#include "foilrl/random.hpp"

namespace foilrl {

using Action = std::array<double, kNumParams>;
using Observation = std::array<double, kNumParams>;

struct PoolEntry {
  std::string name;
  CstParams params;
  double residual = 0.0;
};

// The 20 NACA sections airfoils are reset to during training.
const std::vector<std::string>& default_reset_names();

struct EnvConfig {
  ParamBounds bounds = ParamBounds::defaults();
  int episode_max_length = 100;
  double sigma = 0.0;
  SolverConfig solver = SolverConfig::high_fidelity();
  FlowConditions flow;
  std::vector<PoolEntry> reset_pool;
  int max_reset_attempts = 64;

  void validate() const;
};

// (upper(i) - lower(i)) / episode_max_length
std::array<double, kNumParams> alpha_vector(const EnvConfig& cfg);

// exp(-sigma (mt / mt0 - 1)^2)
double thickness_kernel(double mt, double mt0, double sigma);

// Componentwise map of the bounds box onto [-1, 1] and back.
Observation normalize_observation(const CstParams& p, const ParamBounds& b);
CstParams denormalize_observation(const Observation& o, const ParamBounds& b);

enum class StepReason { running, max_steps, solver_failure, invalid_geometry };
const char* to_string(StepReason r);

struct StepInfo {
  double cl = 0.0;
  double cd = 0.0;
  double ratio = 0.0;
  double kappa = 0.0;
  double lambda = 0.0;
  double mt = 0.0;
  bool converged = false;
};

struct StepOutcome {
  CstParams observation;
  double reward = 0.0;
  bool terminated = false;
  StepReason reason = StepReason::running;
  StepInfo info;

  // Ended by the step limit rather than by a failure.
  bool truncated() const { return reason == StepReason::max_steps; }
};

struct EnvState {
  CstParams params;
  int step_index = 0;
  double mt0 = 0.0;
  double prev_term = 0.0;
  double episode_return = 0.0;
  bool terminated = false;
  std::string airfoil;
  StepInfo initial;
};

class AirfoilEnv {
 public:
  // Uses the solver described by cfg.solver and cfg.flow.
  explicit AirfoilEnv(EnvConfig cfg);
  // Injected solver, e.g. a stub in tests.
  AirfoilEnv(EnvConfig cfg, AeroSolver solver);

  const EnvConfig& config() const { return cfg_; }
  const EnvState& state() const { return state_; }
  const std::array<double, kNumParams>& alpha() const { return alpha_; }

  // Samples a pool airfoil uniformly, resampling when its initial solve
  // fails. Throws ResetError on an empty pool or after max_reset_attempts.
  CstParams reset(Rng& rng);

  // Starts an episode from a given design. Returns false (and leaves the
  // environment terminated) when the initial solve fails.
  bool reset_to(const CstParams& params, const std::string& name = "");

  StepOutcome step(const Action& action);

  Observation observe() const { return normalize_observation(state_.params, cfg_.bounds); }

  // Solver calls made so far, reset solves included.
  std::int64_t solver_calls() const { return solver_calls_; }

 private:
  StepInfo evaluate(const CstParams& p, bool& valid_geometry);

  EnvConfig cfg_;
  AeroSolver solver_;
  std::array<double, kNumParams> alpha_{};
  EnvState state_;
  std::int64_t solver_calls_ = 0;
};

// Reset pool from `<dir>/<name>.dat` files, with fitted parameters cached in
// `cache_path` (a versioned CSV keyed by name). A stale or unreadable cache
// is rebuilt. An empty cache_path disables caching.
std::vector<PoolEntry> load_reset_pool(const std::string& dir,
                                       const std::vector<std::string>& names,
                                       const std::string& cache_path,
                                       const ParamBounds& bounds = ParamBounds::defaults());

}  // namespace foilrl
