#pragma once

// Global-best particle swarm over the CST box.

#include <cstdint>
#include <functional>
#include <vector>

#include "foilrl/aero.hpp"
#include "foilrl/geometry.hpp"
#include "foilrl/random.hpp"

namespace foilrl {

struct ThicknessConstraint {
  bool enabled = false;
  double mt0 = 0.0;  // <= 0: taken from the seed design
  double tolerance = 0.01;
};

struct PsoConfig {
  int swarm_size = 30;
  int iterations = 700;
  double inertia = 0.729;
  double cognitive = 1.49;
  double social = 1.49;
  double velocity_clamp = 0.2;  // fraction of each parameter's range
  double init_spread = 0.1;     // initial perturbation, fraction of range
  ThicknessConstraint constraint;
  int n_workers = 1;

  void validate() const;
};

// Larger is better; -infinity marks an infeasible or failed design.
using Fitness = std::function<double(const CstParams&)>;

struct PsoResult {
  CstParams best;
  double best_fitness = 0.0;
  std::vector<double> trace;  // global best after init, then after each iteration
  std::int64_t fitness_calls = 0;
  double wall_seconds = 0.0;
};

// Particle 0 starts at the seed, the others at the seed plus a uniform
// perturbation; velocities start at zero. Every fitness evaluation is
// counted, so fitness_calls == swarm_size * (iterations + 1).
PsoResult pso_optimize(const CstParams& seed, const Fitness& fitness, const PsoConfig& cfg,
                       const ParamBounds& bounds, Rng& rng);

// CL/CD, or -infinity for invalid geometry, a failed solve, or (when the
// constraint is enabled) |mt - mt0| / mt0 > tolerance.
Fitness aero_fitness(AeroSolver solver, const ThicknessConstraint& constraint);

// Checks the seed solves (SeedError otherwise), fills the constraint's mt0
// from the seed when unset, and runs the swarm.
PsoResult pso_optimize_airfoil(const CstParams& seed, const AeroSolver& solver, PsoConfig cfg,
                               const ParamBounds& bounds, Rng& rng);

}  // namespace foilrl
