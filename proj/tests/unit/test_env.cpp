#include <doctest.h>

#include <cmath>
#include <memory>

#include "foilrl/env.hpp"
#include "foilrl/errors.hpp"

using namespace foilrl;

namespace {

CstParams naca_params(const std::string& digits) {
  return fit_cst(naca4_coordinates(digits), ParamBounds::defaults()).params;
}

// Deterministic pseudo-aerodynamics driven by a shared RNG: converges with
// probability `p_ok`, otherwise reports a failure.
AeroSolver stub_solver(std::shared_ptr<Rng> rng, double p_ok) {
  return [rng, p_ok](const AirfoilGeometry&) {
    AeroResult r;
    r.converged = rng->uniform() < p_ok;
    if (!r.converged) {
      r.failure = "stub failure";
      return r;
    }
    r.cl = rng->uniform(0.1, 1.5);
    r.cd = rng->uniform(0.005, 0.03);
    r.confidence = rng->uniform(0.2, 1.0);
    return r;
  };
}

EnvConfig stub_config(double sigma, int max_len = 100) {
  EnvConfig c;
  c.sigma = sigma;
  c.episode_max_length = max_len;
  c.reset_pool = {{"naca0012", naca_params("0012"), 0.0}, {"naca2412", naca_params("2412"), 0.0}};
  return c;
}

}  // namespace

TEST_CASE("thickness kernel") {
  CHECK(thickness_kernel(0.12, 0.12, 100.0) == 1.0);
  CHECK(thickness_kernel(0.10, 0.12, 0.0) == 1.0);
  CHECK(thickness_kernel(0.06, 0.12, 15.0) == doctest::Approx(std::exp(-15.0 * 0.25)));
  CHECK_THROWS_AS(thickness_kernel(0.1, 0.0, 1.0), InvalidParams);
  CHECK_THROWS_AS(thickness_kernel(0.1, 0.1, -1.0), InvalidParams);
}

TEST_CASE("observation normalization round trip") {
  const ParamBounds b = ParamBounds::defaults();
  const CstParams p = naca_params("4412");
  const Observation o = normalize_observation(p, b);
  for (double v : o) CHECK(std::abs(v) <= 1.0);
  const CstParams q = denormalize_observation(o, b);
  for (std::size_t i = 0; i < kNumParams; ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-12));
}

TEST_CASE("telescoping reward identity on simulated episodes") {
  auto rng = std::make_shared<Rng>(99);
  Rng policy(7);
  double worst = 0.0;
  for (int ep = 0; ep < 1000; ++ep) {
    const double sigma = policy.uniform(0.0, 100.0);
    AirfoilEnv env(stub_config(sigma, 1 + static_cast<int>(policy.below(30))), stub_solver(rng, 0.97));
    env.reset(policy);
    double sum = env.state().episode_return;  // R_0 = kappa_0 (CL/CD)_0
    CHECK(sum == env.state().initial.kappa * env.state().initial.ratio);
    StepOutcome out;
    do {
      Action a;
      for (auto& x : a) x = policy.uniform(-1.5, 1.5);
      out = env.step(a);
      sum += out.reward;
    } while (!out.terminated);
    const double final_term = out.info.converged ? out.info.lambda * out.info.kappa * out.info.ratio : 0.0;
    worst = std::max(worst, std::abs(sum - final_term));
    worst = std::max(worst, std::abs(env.state().episode_return - final_term));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("actions are clipped and scaled by alpha") {
  auto rng = std::make_shared<Rng>(1);
  AirfoilEnv env(stub_config(0.0), stub_solver(rng, 1.0));
  REQUIRE(env.reset_to(naca_params("0012"), "naca0012"));
  const CstParams before = env.state().params;
  Action a{};
  a[0] = 5.0;
  a[1] = -0.5;
  env.step(a);
  const CstParams after = env.state().params;
  CHECK(after[0] - before[0] == doctest::Approx(env.alpha()[0]));
  CHECK(after[1] - before[1] == doctest::Approx(-0.5 * env.alpha()[1]));
  CHECK(after[2] == before[2]);
  Action nan{};
  nan[3] = std::nan("");
  CHECK_THROWS_AS(env.step(nan), InvalidParams);
}

TEST_CASE("episode ends at the step limit") {
  auto rng = std::make_shared<Rng>(3);
  AirfoilEnv env(stub_config(0.0, 5), stub_solver(rng, 1.0));
  REQUIRE(env.reset_to(naca_params("0012")));
  StepOutcome out;
  for (int i = 0; i < 5; ++i) {
    CHECK_FALSE(out.terminated);
    out = env.step(Action{});
  }
  CHECK(out.terminated);
  CHECK(out.truncated());
  CHECK(out.reason == StepReason::max_steps);
  CHECK_THROWS_AS(env.step(Action{}), ContractViolation);
}

TEST_CASE("solver failure terminates with the negated previous term") {
  auto rng = std::make_shared<Rng>(5);
  bool fail = false;
  AeroSolver s = [&fail](const AirfoilGeometry&) {
    AeroResult r;
    r.converged = !fail;
    r.cl = 0.5;
    r.cd = 0.01;
    r.confidence = 1.0;
    return r;
  };
  AirfoilEnv env(stub_config(0.0), s);
  REQUIRE(env.reset_to(naca_params("0012")));
  StepOutcome out = env.step(Action{});
  CHECK(out.reward == doctest::Approx(0.0));
  fail = true;
  out = env.step(Action{});
  CHECK(out.terminated);
  CHECK(out.reason == StepReason::solver_failure);
  CHECK(out.reward == doctest::Approx(-50.0));
  CHECK_FALSE(out.truncated());
}

TEST_CASE("invalid geometry terminates the episode") {
  auto rng = std::make_shared<Rng>(5);
  AirfoilEnv env(stub_config(0.0), stub_solver(rng, 1.0));
  CstParams p = naca_params("0006");
  REQUIRE(env.reset_to(p));
  Action squash{};
  for (std::size_t i = 0; i < kWeightsPerSurface; ++i) squash[i] = -1.0, squash[8 + i] = 1.0;
  StepOutcome out;
  for (int i = 0; i < 100 && !out.terminated; ++i) out = env.step(squash);
  CHECK(out.reason == StepReason::invalid_geometry);
}

TEST_CASE("reset handles failing pools") {
  auto rng = std::make_shared<Rng>(5);
  EnvConfig cfg = stub_config(0.0);
  cfg.max_reset_attempts = 8;
  AirfoilEnv env(cfg, stub_solver(rng, 0.0));
  Rng r(1);
  CHECK_THROWS_AS(env.reset(r), ResetError);
  EnvConfig empty = stub_config(0.0);
  empty.reset_pool.clear();
  AirfoilEnv env2(empty, stub_solver(rng, 1.0));
  CHECK_THROWS_AS(env2.reset(r), ResetError);
  CHECK_FALSE(env.reset_to(naca_params("0012")));
  CHECK(env.state().terminated);
}

TEST_CASE("sigma scales the reward by the thickness kernel") {
  AeroSolver s = [](const AirfoilGeometry&) {
    AeroResult r;
    r.converged = true;
    r.cl = 1.0;
    r.cd = 0.01;
    r.confidence = 1.0;
    return r;
  };
  AirfoilEnv env(stub_config(50.0), s);
  REQUIRE(env.reset_to(naca_params("0012")));
  const double mt0 = env.state().mt0;
  Action thin{};
  for (std::size_t i = 0; i < kWeightsPerSurface; ++i) thin[i] = -1.0, thin[8 + i] = 1.0;
  const StepOutcome out = env.step(thin);
  REQUIRE(out.info.converged);
  CHECK(out.info.mt < mt0);
  CHECK(out.info.lambda == doctest::Approx(thickness_kernel(out.info.mt, mt0, 50.0)));
  CHECK(out.reward == doctest::Approx(100.0 * out.info.lambda - 100.0));
}

TEST_CASE("reset pool loading and cache") {
  const std::string dir = std::string(FOILRL_TEST_DATA) + "/airfoils/reset";
  const std::string cache = "reset_pool_cache_test.csv";
  std::remove(cache.c_str());
  const auto a = load_reset_pool(dir, default_reset_names(), cache);
  const auto b = load_reset_pool(dir, default_reset_names(), cache);
  REQUIRE(a.size() == 20);
  REQUIRE(b.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].params == b[i].params);
    CHECK(a[i].residual < 1e-3);
  }
  std::remove(cache.c_str());
  EnvConfig bad;
  bad.sigma = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParams);
}
