#include "foilrl/pso.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "foilrl/errors.hpp"
#include "foilrl/parallel.hpp"

namespace foilrl {

namespace {

constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

}  // namespace

void PsoConfig::validate() const {
  FOILRL_REQUIRE(swarm_size > 0, InvalidParams, "pso: swarm_size must be positive");
  FOILRL_REQUIRE(iterations >= 0, InvalidParams, "pso: iterations must be >= 0");
  FOILRL_REQUIRE(inertia >= 0.0 && cognitive >= 0.0 && social >= 0.0, InvalidParams,
                 "pso: coefficients must be >= 0");
  FOILRL_REQUIRE(velocity_clamp > 0.0, InvalidParams, "pso: velocity_clamp must be positive");
  FOILRL_REQUIRE(init_spread >= 0.0, InvalidParams, "pso: init_spread must be >= 0");
  FOILRL_REQUIRE(!constraint.enabled || constraint.tolerance >= 0.0, InvalidParams,
                 "pso: constraint tolerance must be >= 0");
}

PsoResult pso_optimize(const CstParams& seed, const Fitness& fitness, const PsoConfig& cfg,
                       const ParamBounds& bounds, Rng& rng) {
  cfg.validate();
  bounds.validate();
  FOILRL_REQUIRE(seed.all_finite(), InvalidParams, "pso: non-finite seed");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = static_cast<std::size_t>(cfg.swarm_size);

  std::array<double, kNumParams> range{}, vmax{};
  for (std::size_t d = 0; d < kNumParams; ++d) {
    range[d] = bounds.upper[d] - bounds.lower[d];
    vmax[d] = cfg.velocity_clamp * range[d];
  }

  std::vector<CstParams> x(n), pbest(n);
  std::vector<std::array<double, kNumParams>> v(n);
  std::vector<double> f(n), pbest_f(n);
  x[0] = bounds.clamp(seed);
  for (std::size_t p = 1; p < n; ++p) {
    CstParams q = seed;
    for (std::size_t d = 0; d < kNumParams; ++d) q[d] += cfg.init_spread * range[d] * rng.uniform(-1.0, 1.0);
    x[p] = bounds.clamp(q);
  }
  for (auto& vel : v) vel.fill(0.0);

  PsoResult res;
  auto evaluate = [&] {
    parallel_for(n, cfg.n_workers, [&](std::size_t p) {
      const double val = fitness(x[p]);
      f[p] = std::isnan(val) ? kInfeasible : val;
    });
    res.fitness_calls += static_cast<std::int64_t>(n);
  };

  evaluate();
  pbest = x;
  pbest_f = f;
  std::size_t g = 0;
  for (std::size_t p = 1; p < n; ++p) {
    if (f[p] > f[g]) g = p;
  }
  CstParams gbest = x[g];
  double gbest_f = f[g];
  res.trace.push_back(gbest_f);

  for (int it = 0; it < cfg.iterations; ++it) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t d = 0; d < kNumParams; ++d) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        double vel = cfg.inertia * v[p][d] + cfg.cognitive * r1 * (pbest[p][d] - x[p][d]) +
                     cfg.social * r2 * (gbest[d] - x[p][d]);
        vel = std::clamp(vel, -vmax[d], vmax[d]);
        v[p][d] = vel;
        x[p][d] = std::clamp(x[p][d] + vel, bounds.lower[d], bounds.upper[d]);
      }
    }
    evaluate();
    for (std::size_t p = 0; p < n; ++p) {
      if (f[p] > pbest_f[p]) {
        pbest_f[p] = f[p];
        pbest[p] = x[p];
      }
      if (f[p] > gbest_f) {
        gbest_f = f[p];
        gbest = x[p];
      }
    }
    res.trace.push_back(gbest_f);
  }

  res.best = gbest;
  res.best_fitness = gbest_f;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

Fitness aero_fitness(AeroSolver solver, const ThicknessConstraint& constraint) {
  FOILRL_REQUIRE(static_cast<bool>(solver), InvalidParams, "aero_fitness: empty solver");
  FOILRL_REQUIRE(!constraint.enabled || constraint.mt0 > 0.0, InvalidParams,
                 "aero_fitness: constraint needs a positive mt0");
  return [solver = std::move(solver), constraint](const CstParams& p) {
    const AirfoilGeometry geom = cst_to_geometry(p);
    if (!is_valid(geom)) return kInfeasible;
    if (constraint.enabled &&
        std::abs(max_thickness(geom) - constraint.mt0) / constraint.mt0 > constraint.tolerance) {
      return kInfeasible;
    }
    AeroResult r;
    try {
      r = solver(geom);
    } catch (const GeometryRejected&) {
      return kInfeasible;
    }
    return r.converged ? r.cl / r.cd : kInfeasible;
  };
}

PsoResult pso_optimize_airfoil(const CstParams& seed, const AeroSolver& solver, PsoConfig cfg,
                               const ParamBounds& bounds, Rng& rng) {
  const CstParams s = bounds.clamp(seed);
  const AirfoilGeometry geom = cst_to_geometry(s);
  if (!is_valid(geom)) throw SeedError("pso: seed geometry is invalid");
  AeroResult r;
  try {
    r = solver(geom);
  } catch (const GeometryRejected& e) {
    throw SeedError(std::string("pso: seed rejected: ") + e.what());
  }
  if (!r.converged) throw SeedError("pso: seed does not solve (" + r.failure + ")");
  if (cfg.constraint.enabled && cfg.constraint.mt0 <= 0.0) cfg.constraint.mt0 = max_thickness(geom);
  return pso_optimize(s, aero_fitness(solver, cfg.constraint), cfg, bounds, rng);
}

}  // namespace foilrl
