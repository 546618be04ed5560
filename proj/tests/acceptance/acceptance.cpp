// Acceptance suite: one PASS/FAIL line per criterion. Run everything, or one
// criterion with --criterion N.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "foilrl/aero.hpp"
#include "foilrl/checkpoint.hpp"
#include "foilrl/env.hpp"
#include "foilrl/errors.hpp"
#include "foilrl/eval.hpp"
#include "foilrl/geometry.hpp"
#include "foilrl/nn.hpp"
#include "foilrl/ppo.hpp"
#include "foilrl/pso.hpp"
#include "foilrl/run_config.hpp"
#include "foilrl/transfer.hpp"
#include "oracles.hpp"

using namespace foilrl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok  " : "BAD ") + what);
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

struct Context {
  fs::path work;
  std::string cli;
  std::uint64_t seed = 1;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

EnvConfig bundled_env(const Context& ctx, Fidelity fidelity, double sigma) {
  EnvConfig env = env_config(default_run_config(), fidelity);
  env.sigma = sigma;
  env.reset_pool = load_reset_pool(resolve_data_path("airfoils/reset"), default_reset_names(),
                                   (ctx.work / "reset_pool.csv").string());
  return env;
}

const Dataset& uiuc() {
  static const Dataset ds = load_dataset(resolve_data_path("airfoils/uiuc"));
  return ds;
}

EvalSummary evaluate_high(const Agent& agent, double sigma, const Context& ctx) {
  EnvConfig env = bundled_env(ctx, Fidelity::high, sigma);
  return summarize(evaluate_policy(agent, uiuc().entries, env, true, ctx.seed));
}

// ---------------------------------------------------------------- 1

AeroSolver stub_solver(std::shared_ptr<Rng> rng) {
  return [rng](const AirfoilGeometry&) {
    AeroResult r;
    r.converged = rng->uniform() < 0.97;
    if (!r.converged) {
      r.failure = "stub";
      return r;
    }
    r.cl = rng->uniform(0.1, 1.5);
    r.cd = rng->uniform(0.005, 0.03);
    r.confidence = rng->uniform(0.2, 1.0);
    return r;
  };
}

Outcome numerics(const Context&) {
  Outcome o;
  Rng rng(101);

  double mlp_worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    std::vector<int> sizes{1 + static_cast<int>(rng.below(6))};
    const int depth = 1 + static_cast<int>(rng.below(3));
    for (int d = 0; d < depth; ++d) sizes.push_back(1 + static_cast<int>(rng.below(8)));
    Mlp net(sizes);
    net.init_orthogonal(rng, 1.0);
    Matrix x(sizes.front(), 3), up(sizes.back(), 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = rng.normal();
    auto objective = [&] { return (net.forward_batch(x).array() * up.array()).sum(); };
    MlpCache cache;
    net.forward_batch(x, &cache);
    MlpGrads g = net.zero_grads();
    net.backward(cache, up, g);
    double diff2 = 0.0, norm2 = 0.0;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      auto fd = [&](double& p, double analytic) {
        const double keep = p;
        p = keep + 1e-6;
        const double fp = objective();
        p = keep - 1e-6;
        const double fm = objective();
        p = keep;
        const double num = (fp - fm) / 2e-6;
        diff2 += (num - analytic) * (num - analytic);
        norm2 += num * num + analytic * analytic;
      };
      for (Eigen::Index i = 0; i < net.layer(l).weight.size(); ++i) {
        fd(net.layer(l).weight.data()[i], g.weight[l].data()[i]);
      }
      for (Eigen::Index i = 0; i < net.layer(l).bias.size(); ++i) fd(net.layer(l).bias(i), g.bias[l](i));
    }
    mlp_worst = std::max(mlp_worst, std::sqrt(diff2 / std::max(norm2, 1e-300)));
  }
  o.check(mlp_worst < 1e-4, fmt("MLP gradient max rel err %.2e (< 1e-4)", mlp_worst));

  double gae_worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int len = 1 + static_cast<int>(rng.below(20));
    const bool done = rng.uniform() < 0.5;
    const double gamma = rng.uniform(0.1, 1.0), lambda = rng.uniform(0.0, 1.0);
    RolloutBuffer buf;
    buf.allocate(len, 1);
    buf.rewards.resize(len);
    buf.values.resize(len);
    buf.terminal_values = Vector::Zero(len);
    buf.last_values = Vector::Constant(1, rng.normal());
    buf.dones.assign(len, false);
    std::vector<double> r(len), v(len);
    for (int t = 0; t < len; ++t) {
      r[t] = buf.rewards(t) = rng.normal();
      v[t] = buf.values(t) = rng.normal();
    }
    buf.dones[len - 1] = done;
    if (done) buf.terminal_values(len - 1) = rng.uniform() < 0.5 ? 0.0 : rng.normal();
    compute_gae(buf, gamma, lambda);
    const double v_end = done ? buf.terminal_values(len - 1) : buf.last_values(0);
    const auto expect = oracle::gae_bruteforce(r, v, v_end, gamma, lambda);
    for (int t = 0; t < len; ++t) gae_worst = std::max(gae_worst, std::abs(buf.advantages(t) - expect[t]));
  }
  o.check(gae_worst < 1e-12, fmt("GAE max abs err %.2e (< 1e-12)", gae_worst));

  double lp_worst = 0.0, h_worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    Vector mean(kActionSize), ls(kActionSize), x(kActionSize);
    double lp = 0.0, h = 0.0;
    for (int i = 0; i < kActionSize; ++i) {
      mean(i) = rng.normal();
      ls(i) = rng.uniform(-4.0, 1.5);
      const double sd = std::exp(ls(i));
      x(i) = mean(i) + sd * rng.normal();
      lp += -0.5 * std::pow((x(i) - mean(i)) / sd, 2) - std::log(sd) - 0.5 * std::log(2 * M_PI);
      h += 0.5 * std::log(2 * M_PI * M_E * sd * sd);
    }
    lp_worst = std::max(lp_worst, std::abs(gaussian_log_prob(mean, ls, x) - lp));
    h_worst = std::max(h_worst, std::abs(gaussian_entropy(ls) - h));
  }
  o.check(lp_worst < 1e-10 && h_worst < 1e-10,
          fmt("Gaussian log-prob err %.2e, entropy err %.2e (< 1e-10)", lp_worst, h_worst));

  auto solver_rng = std::make_shared<Rng>(102);
  EnvConfig cfg;
  const ParamBounds b = cfg.bounds;
  for (const char* d : {"0012", "2412", "4415"}) {
    cfg.reset_pool.push_back({d, fit_cst(naca4_coordinates(d), b).params, 0.0});
  }
  double tel_worst = 0.0;
  for (int ep = 0; ep < 1000; ++ep) {
    EnvConfig c = cfg;
    c.sigma = rng.uniform(0.0, 100.0);
    c.episode_max_length = 1 + static_cast<int>(rng.below(40));
    AirfoilEnv env(c, stub_solver(solver_rng));
    env.reset(rng);
    double sum = env.state().episode_return;
    StepOutcome out;
    do {
      Action a;
      for (auto& v : a) v = rng.uniform(-1.5, 1.5);
      out = env.step(a);
      sum += out.reward;
    } while (!out.terminated);
    const double final_term = out.info.converged ? out.info.lambda * out.info.kappa * out.info.ratio : 0.0;
    tel_worst = std::max(tel_worst, std::abs(sum - final_term));
  }
  o.check(tel_worst < 1e-9, fmt("telescoping reward max err %.2e over 1000 episodes (< 1e-9)", tel_worst));
  return o;
}

// ---------------------------------------------------------------- 2

Outcome geometry(const Context&) {
  Outcome o;
  const ParamBounds b = ParamBounds::defaults();
  Rng rng(202);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    CstParams p;
    for (std::size_t i = 0; i < kNumParams; ++i) p[i] = rng.uniform(b.lower[i], b.upper[i]);
    const CstFit fit = fit_cst(cst_to_geometry(p, 200), b);
    for (std::size_t i = 0; i < kNumParams; ++i) worst = std::max(worst, std::abs(fit.params[i] - p[i]));
  }
  o.check(worst < 1e-5, fmt("CST round trip max |p - p'| %.2e on 200 vectors (< 1e-5)", worst));

  const double oracle_mt = oracle::naca4_max_thickness(0.12);
  const double mt = max_thickness(cst_to_geometry(fit_cst(naca4_coordinates("0012"), b).params));
  o.check(std::abs(oracle_mt - 0.120) <= 0.001 && std::abs(mt - 0.120) <= 0.001,
          fmt("NACA0012 max thickness %.5f, oracle %.5f (0.120 +- 0.001)", mt, oracle_mt));

  EnvConfig env;
  const auto alpha = alpha_vector(env);
  bool exact = true;
  for (std::size_t i = 0; i < kNumParams; ++i) exact = exact && alpha[i] == (b.upper[i] - b.lower[i]) / 100.0;
  o.check(exact && alpha[0] == 0.0275, fmt("alpha = bounds range / 100, upper weight step %.4f", alpha[0]));
  return o;
}

// ---------------------------------------------------------------- 3

FlowConditions flow(double aoa, double mach) {
  FlowConditions f;
  f.angle_of_attack_deg = aoa;
  f.mach = mach;
  return f;
}

Outcome solvers(const Context&) {
  Outcome o;
  auto naca = [](const char* d) {
    return cst_to_geometry(fit_cst(naca4_coordinates(d), ParamBounds::defaults()).params);
  };
  const AirfoilGeometry sym = naca("0012");
  const AeroResult hi0 = solve(sym, flow(0.0, 0.0), SolverConfig::high_fidelity());
  const AeroResult lo0 = solve(sym, flow(0.0, 0.0), SolverConfig::low_fidelity());
  o.check(hi0.converged && lo0.converged && std::abs(hi0.cl) < 1e-6 && std::abs(lo0.cl) < 1e-6,
          fmt("symmetric section at 0 deg: CL high %.1e, low %.1e", hi0.cl, lo0.cl));

  AirfoilGeometry plate;
  plate.x = cosine_stations(200);
  plate.y_upper.assign(plate.x.size(), 0.0);
  plate.y_lower.assign(plate.x.size(), 0.0);
  const double plate_cl = solve_low_fidelity(plate, flow(2.0, 0.0), SolverConfig::low_fidelity()).cl;
  const double exact = 2.0 * M_PI * std::sin(2.0 * M_PI / 180.0);
  o.check(plate_cl == exact, fmt("flat plate CL %.17g vs 2 pi sin 2deg %.17g", plate_cl, exact));

  const AirfoilGeometry g = naca("2412");
  double pg_worst = 0.0;
  for (const SolverConfig& sc : {SolverConfig::low_fidelity(), SolverConfig::high_fidelity()}) {
    const double cl0 = solve(g, flow(2.0, 0.0), sc).cl;
    for (double m : {0.2, 0.4, 0.6}) {
      const double cl = solve(g, flow(2.0, m), sc).cl;
      pg_worst = std::max(pg_worst, std::abs(cl * std::sqrt(1 - m * m) - cl0));
    }
  }
  o.check(pg_worst < 1e-10, fmt("Prandtl-Glauert identity max err %.2e (< 1e-10)", pg_worst));

  const AeroResult n12 = solve(sym, flow(2.0, 0.0), SolverConfig::high_fidelity());
  const double rel = std::abs(n12.cl - 0.2193) / 0.2193;
  o.check(n12.converged && rel < 0.15, fmt("NACA0012 high-fidelity CL at 2 deg %.4f (%.1f%% from 0.2193)", n12.cl, 100 * rel));

  SolverConfig c128 = SolverConfig::high_fidelity(), c256 = c128;
  c128.panels = 128;
  c256.panels = 256;
  const double a = solve(g, flow(2.0, 0.5), c128).cl, bcl = solve(g, flow(2.0, 0.5), c256).cl;
  const double change = std::abs(a - bcl) / std::abs(bcl);
  o.check(change < 0.02, fmt("panel refinement 128 -> 256 changes CL by %.2f%% (< 2%%)", 100 * change));
  return o;
}

// ---------------------------------------------------------------- 4, 5

// Desk-scale budget: the largest whole number of updates within 30k steps.
std::int64_t desk_budget() {
  const PpoConfig p = PpoConfig::from_scratch();
  const std::int64_t per_update = static_cast<std::int64_t>(p.n_steps) * p.n_envs;
  return (30000 / per_update) * per_update;
}

struct DeskRun {
  EvalSummary summary;
  double train_seconds = 0.0;
};

DeskRun desk_run(const Context& ctx, double sigma) {
  PpoConfig p = PpoConfig::from_scratch();
  p.total_timesteps = desk_budget();
  const EnvConfig env = bundled_env(ctx, Fidelity::low, sigma);
  TrainOptions opts;
  opts.checkpoint_out = (ctx.work / ("desk_sigma" + fmt("%g", sigma) + ".bin")).string();
  const TrainResult r = train(env, p, ctx.seed, opts);
  DeskRun out;
  out.train_seconds = r.wall_seconds;
  out.summary = evaluate_high(r.checkpoint.agent, sigma, ctx);
  std::printf("  sigma %g: trained %lld steps in %.0f s; %zu converged, improvement %.2f +- %.2f, improved %.1f%%, "
              "best median %.1f, delta MT %.1f%%\n",
              sigma, static_cast<long long>(r.timesteps), r.wall_seconds, out.summary.n_evaluated,
              out.summary.improvement_mean, out.summary.improvement_std, 100 * out.summary.improved_fraction,
              out.summary.best_median, out.summary.delta_mt_mean);
  std::fflush(stdout);
  return out;
}

Outcome desk_training(const Context& ctx) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const DeskRun r = desk_run(ctx, 0.0);
  const EvalSummary& s = r.summary;
  o.check(desk_budget() <= 30000, fmt("budget %.0f steps (<= 30k), gamma %.1f", static_cast<double>(desk_budget()),
                                       PpoConfig::from_scratch().gamma));
  o.check(s.n_evaluated >= 50, fmt("%.0f converged airfoils (>= 50)", static_cast<double>(s.n_evaluated)));
  o.check(s.improved_fraction >= 0.8, fmt("improved on %.1f%% of converged airfoils (>= 80%%)", 100 * s.improved_fraction));
  o.check(s.improvement_mean > 20.0, fmt("mean improvement %.2f CL/CD (> 20)", s.improvement_mean));
  o.check(seconds_since(t0) <= 1800.0, fmt("wall time %.0f s (<= 30 min)", seconds_since(t0)));
  return o;
}

Outcome sigma_sensitivity(const Context& ctx) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const DeskRun s0 = desk_run(ctx, 0.0), s15 = desk_run(ctx, 15.0), s100 = desk_run(ctx, 100.0);
  o.check(s0.summary.delta_mt_mean > s15.summary.delta_mt_mean && s15.summary.delta_mt_mean > s100.summary.delta_mt_mean,
          fmt("mean delta MT %.1f%% > %.1f%% > %.1f%%", s0.summary.delta_mt_mean, s15.summary.delta_mt_mean,
              s100.summary.delta_mt_mean));
  o.check(s0.summary.improvement_mean > s100.summary.improvement_mean,
          fmt("mean improvement sigma 0 %.2f > sigma 100 %.2f", s0.summary.improvement_mean,
              s100.summary.improvement_mean));
  o.check(seconds_since(t0) <= 7200.0, fmt("wall time %.0f s (<= 2 h)", seconds_since(t0)));
  return o;
}

// ---------------------------------------------------------------- 6

Outcome transfer_efficiency(const Context& ctx) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const std::int64_t budget = 30720;
  const EnvConfig low = bundled_env(ctx, Fidelity::low, 0.0);
  const EnvConfig high = bundled_env(ctx, Fidelity::high, 0.0);

  PpoConfig pre_cfg = PpoConfig::pretrain();
  pre_cfg.total_timesteps = budget;
  const TrainResult pre = train(low, pre_cfg, ctx.seed);
  PpoConfig ft_cfg = PpoConfig::finetune();
  ft_cfg.total_timesteps = budget / 4;
  const FinetuneResult ft = finetune(pre.checkpoint, TlStrategy::share_all, high, ft_cfg, ctx.seed);
  const EvalSummary tuned = evaluate_high(ft.train.checkpoint.agent, 0.0, ctx);

  PpoConfig scratch_cfg = PpoConfig::from_scratch();
  scratch_cfg.total_timesteps = budget;
  const TrainResult scratch = train(high, scratch_cfg, ctx.seed);
  const EvalSummary base = evaluate_high(scratch.checkpoint.agent, 0.0, ctx);
  std::printf("  pretrain %.0f s, fine-tune %.0f s, from scratch %.0f s\n", pre.wall_seconds,
              ft.train.wall_seconds, scratch.wall_seconds);
  std::printf("  fine-tuned: improvement %.2f, improved %.1f%%; from scratch: improvement %.2f, improved %.1f%%\n",
              tuned.improvement_mean, 100 * tuned.improved_fraction, base.improvement_mean,
              100 * base.improved_fraction);

  const double ratio = tuned.improvement_mean / base.improvement_mean;
  o.check(ratio >= 0.85, fmt("fine-tuned / from-scratch mean improvement %.3f (>= 0.85)", ratio));

  const double baseline_s = static_cast<double>(budget) * kHighFidelityCostMs / 1000.0;
  const double tr = time_reduction(baseline_s, ft.ledger.total_seconds());
  o.check(tr >= 70.0, fmt("ledger time reduction %.2f%% for B, B/4 vs B (>= 70%%)", tr));

  CostLedger paper;
  paper.pretrain_steps = 26312;
  paper.finetune_steps = 10240;
  const double paper_tr = time_reduction(81920 * kHighFidelityCostMs / 1000.0, paper.total_seconds());
  o.check(std::abs(paper_tr - 85.7) <= 0.1, fmt("reference step counts give %.2f%% (85.7 +- 0.1)", paper_tr));
  o.check(seconds_since(t0) <= 7200.0, fmt("wall time %.0f s (<= 2 h)", seconds_since(t0)));
  return o;
}

// ---------------------------------------------------------------- 7

bool same_forward(const Agent& a, const Agent& b, Rng& rng) {
  for (int k = 0; k < 50; ++k) {
    Vector x(kObservationSize);
    for (int i = 0; i < kObservationSize; ++i) x(i) = rng.uniform(-1.0, 1.0);
    const Vector ma = a.act_mean(x), mb = b.act_mean(x);
    if (!(ma == mb) || a.value(x) != b.value(x)) return false;
  }
  return a.log_std == b.log_std;
}

RolloutBuffer synthetic_buffer(const Agent& agent, Rng& rng, int n) {
  RolloutBuffer buf;
  buf.allocate(n, 1);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < kObservationSize; ++k) buf.observations(k, i) = rng.uniform(-1.0, 1.0);
    const PolicySample s = gaussian_policy(agent.act_mean(buf.observations.col(i)), agent.log_std, rng);
    buf.actions.col(i) = s.action;
    buf.log_probs(i) = s.log_prob;
    buf.values(i) = agent.value(buf.observations.col(i));
    buf.advantages(i) = rng.normal();
    buf.returns(i) = buf.values(i) + buf.advantages(i);
  }
  return buf;
}

Outcome strategy_contracts(const Context&) {
  Outcome o;
  Rng rng(707);
  AgentCheckpoint src = make_checkpoint(Agent(default_hidden_sizes(), rng));
  // Give the source some history so copied and fresh layers differ.
  {
    PpoConfig p;
    p.batch_size = 64;
    p.n_epochs = 1;
    const RolloutBuffer buf = synthetic_buffer(src.agent, rng, 64);
    for (int i = 0; i < 20; ++i) ppo_update(src.agent, src.adam, src.mask, buf, p, rng);
  }
  const std::size_t na = src.agent.actor.num_layers(), nc = src.agent.critic.num_layers();

  Rng r1(1);
  const AgentCheckpoint s1 = apply_strategy(src, TlStrategy::share_all, r1);
  Rng probe(2);
  o.check(same_forward(s1.agent, src.agent, probe) && !s1.mask.any(),
          "#1: forward outputs bit-identical to the source before fine-tuning, nothing frozen");

  Rng r2(3);
  const AgentCheckpoint s2 = apply_strategy(src, TlStrategy::share_all_but_last, r2);
  bool hidden_same = true;
  for (std::size_t l = 0; l + 1 < na; ++l) {
    hidden_same = hidden_same && s2.agent.actor.layer(l).weight == src.agent.actor.layer(l).weight &&
                  s2.agent.actor.layer(l).bias == src.agent.actor.layer(l).bias;
  }
  for (std::size_t l = 0; l + 1 < nc; ++l) {
    hidden_same = hidden_same && s2.agent.critic.layer(l).weight == src.agent.critic.layer(l).weight &&
                  s2.agent.critic.layer(l).bias == src.agent.critic.layer(l).bias;
  }
  const Matrix& wa = s2.agent.actor.layer(na - 1).weight;
  const Matrix& wc = s2.agent.critic.layer(nc - 1).weight;
  const bool reinit = !(wa == src.agent.actor.layer(na - 1).weight) && !(wc == src.agent.critic.layer(nc - 1).weight) &&
                      (wa * wa.transpose() - 1e-4 * Matrix::Identity(wa.rows(), wa.rows())).cwiseAbs().maxCoeff() < 1e-12 &&
                      std::abs((wc * wc.transpose())(0, 0) - 1.0) < 1e-12 &&
                      s2.agent.actor.layer(na - 1).bias.isZero(0) && s2.agent.log_std.isZero(0);
  o.check(hidden_same && reinit && !s2.mask.any(), "#2: hidden layers identical, last layers freshly initialized");

  for (TlStrategy s : {TlStrategy::freeze_all_but_last, TlStrategy::share_all_but_last_freeze}) {
    Rng rs(4);
    AgentCheckpoint ck = apply_strategy(src, s, rs);
    const Agent before = ck.agent;
    PpoConfig p;
    p.batch_size = 64;
    p.n_epochs = 1;
    Rng data(5);
    RolloutBuffer buf = synthetic_buffer(ck.agent, data, 64);
    for (int step = 0; step < 1000; ++step) {
      if (step % 100 == 0) buf = synthetic_buffer(ck.agent, data, 64);
      ppo_update(ck.agent, ck.adam, ck.mask, buf, p, data);
    }
    bool frozen_same = true;
    for (std::size_t l = 0; l + 1 < na; ++l) {
      frozen_same = frozen_same && ck.agent.actor.layer(l).weight == before.actor.layer(l).weight &&
                    ck.agent.actor.layer(l).bias == before.actor.layer(l).bias;
    }
    for (std::size_t l = 0; l + 1 < nc; ++l) {
      frozen_same = frozen_same && ck.agent.critic.layer(l).weight == before.critic.layer(l).weight &&
                    ck.agent.critic.layer(l).bias == before.critic.layer(l).bias;
    }
    const bool head_moved = !(ck.agent.actor.layer(na - 1).weight == before.actor.layer(na - 1).weight) &&
                            !(ck.agent.critic.layer(nc - 1).weight == before.critic.layer(nc - 1).weight);
    o.check(frozen_same && head_moved && ck.adam.step == 1000,
            std::string("#") + std::to_string(to_int(s)) +
                ": frozen layers bit-stable after 1000 optimizer steps, last layers trained");
  }
  return o;
}

// ---------------------------------------------------------------- 8

Outcome pso_baseline(const Context& ctx) {
  Outcome o;
  ParamBounds box;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    box.lower[i] = -1.0;
    box.upper[i] = 1.0;
  }
  CstParams start;
  start.values().fill(-0.5);
  std::int64_t calls = 0;
  Fitness sphere = [&](const CstParams& p) {
    ++calls;
    double s = 0.0;
    for (std::size_t i = 0; i < kNumParams; ++i) s += (p[i] - 0.25) * (p[i] - 0.25);
    return -s;
  };
  PsoConfig cfg;
  cfg.iterations = 500;
  cfg.init_spread = 0.5;
  Rng rng(808);
  const PsoResult r = pso_optimize(start, sphere, cfg, box, rng);
  o.check(-r.best_fitness < 1e-3, fmt("18-D sphere optimum %.2e (< 1e-3)", -r.best_fitness));
  bool monotone = true;
  for (std::size_t i = 1; i < r.trace.size(); ++i) monotone = monotone && r.trace[i] >= r.trace[i - 1];
  o.check(monotone, "gbest trace non-decreasing");
  const std::int64_t expected = static_cast<std::int64_t>(cfg.swarm_size) * (cfg.iterations + 1);
  o.check(calls == expected && r.fitness_calls == expected,
          fmt("fitness calls %.0f counted %.0f, expected %.0f", static_cast<double>(calls),
              static_cast<double>(r.fitness_calls), static_cast<double>(expected)));

  const CstParams seed = fit_cst(naca4_coordinates("2412"), ParamBounds::defaults()).params;
  PsoConfig ccfg;
  ccfg.iterations = 60;
  ccfg.constraint = {true, 0.0, 0.01};
  Rng crng(809);
  const AeroSolver low = make_solver(SolverConfig::low_fidelity(), FlowConditions{});
  const PsoResult cr = pso_optimize_airfoil(seed, low, ccfg, ParamBounds::defaults(), crng);
  const double mt0 = max_thickness(cst_to_geometry(ParamBounds::defaults().clamp(seed)));
  const double dev = std::abs(max_thickness(cst_to_geometry(cr.best)) - mt0) / mt0;
  o.check(dev <= 0.01 && cr.best_fitness > cr.trace.front() - 1e-12,
          fmt("constrained search |dmt|/mt0 %.4f (<= 0.01), CL/CD %.1f -> %.1f", dev, cr.trace.front(),
              cr.best_fitness));

  // Timing: policy inference against full high-fidelity swarm runs.
  PpoConfig p = PpoConfig::pretrain();
  p.total_timesteps = 8192;
  const TrainResult trained = train(bundled_env(ctx, Fidelity::low, 0.0), p, ctx.seed);
  const auto& entries = uiuc().entries;
  std::vector<DatasetEntry> subset(entries.begin(), entries.begin() + 2);
  const auto drl = evaluate_policy(trained.checkpoint.agent, subset, bundled_env(ctx, Fidelity::high, 0.0));
  std::vector<EvalRecord> pso;
  const PsoConfig defaults = pso_config(default_run_config());
  const AeroSolver high = make_solver(SolverConfig::high_fidelity(), FlowConditions{});
  for (std::size_t i = 0; i < subset.size(); ++i) {
    Rng prng(derive_seed(ctx.seed, 1000 + i));
    const PsoResult pr = pso_optimize_airfoil(subset[i].params, high, defaults, ParamBounds::defaults(), prng);
    EvalRecord rec;
    rec.name = subset[i].name;
    rec.initial = pr.trace.front();
    rec.best = pr.best_fitness;
    rec.initial_converged = true;
    rec.inference_seconds = pr.wall_seconds;
    pso.push_back(rec);
    std::printf("  pso %s: %lld calls, %.1f s\n", rec.name.c_str(), static_cast<long long>(pr.fitness_calls),
                pr.wall_seconds);
  }
  const ComparisonReport rep = compare_report(drl, pso);
  const double speedup = rep.pso_mean_seconds / rep.drl_mean_seconds;
  o.check(!rep.rows.empty() && speedup >= 100.0,
          fmt("per-airfoil inference %.2e s vs PSO %.1f s: %.0fx faster (>= 100x)", rep.drl_mean_seconds,
              rep.pso_mean_seconds, speedup));
  return o;
}

// ---------------------------------------------------------------- 9

int run_cli(const Context& ctx, const std::string& args) {
  const std::string cmd = "\"" + ctx.cli + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const Context& ctx) {
  Outcome o;
  if (ctx.cli.empty() || !fs::exists(ctx.cli)) {
    o.check(false, "command-line tool not found: " + ctx.cli);
    return o;
  }
  const fs::path root = ctx.work / "determinism";
  fs::remove_all(root);
  fs::create_directories(root / "dataset");
  const auto& entries = uiuc().entries;
  for (std::size_t i = 0; i < 3; ++i) {
    fs::copy_file(resolve_data_path("airfoils/uiuc/" + entries[i].name + ".dat"),
                  root / "dataset" / (entries[i].name + ".dat"));
  }
  const std::string airfoil = (root / "dataset" / (entries[0].name + ".dat")).string();
  const std::string cfg = (root / "config.json").string();
  std::ofstream(cfg) << R"({"seed": 5, "env": {"episode_max_length": 12},
    "ppo": {"n_steps": 128, "batch_size": 64, "n_epochs": 2}})";

  const std::string ds = (root / "dataset").string();
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs = {
      {"train --solver low --timesteps 512 --n-envs 2", {"train_log.csv", "reset_pool.csv"}},
      {"evaluate --checkpoint {A}/train/checkpoint.bin --dataset " + ds + " --solver low", {"records.csv"}},
      {"evaluate --checkpoint {A}/train/checkpoint.bin --dataset " + ds + " --solver low --stochastic", {"records.csv"}},
      {"optimize --checkpoint {A}/train/checkpoint.bin --airfoil " + airfoil + " --solver low --stochastic",
       {"trace.csv", "records.csv"}},
      {"pso --dataset " + ds + " --solver low --iterations 8 --swarm-size 6 --keep-thickness 0.02",
       {"records.csv", "trace.csv", "best_params.csv"}},
      {"compare --drl {A}/evaluate/records.csv --pso {A}/pso/records.csv --sweep a={A}/evaluate/records.csv "
       "--sweep b={A}/pso/records.csv",
       {"comparison.csv", "pareto.csv"}},
  };
  std::size_t files = 0;
  bool all_same = true, all_ran = true;
  for (const char* pass : {"a", "b"}) {
    const fs::path dir = root / pass;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      std::string args = runs[k].first;
      for (std::size_t pos; (pos = args.find("{A}")) != std::string::npos;) args.replace(pos, 3, dir.string());
      const std::string name = args.substr(0, args.find(' '));
      const std::string sub = k == 2 ? "evaluate_stochastic" : name;
      const int code = run_cli(ctx, args + " --config " + cfg + " --out " + (dir / sub).string());
      if (code != 0) {
        all_ran = false;
        o.check(false, "foilrl " + name + " exited with " + std::to_string(code));
      }
    }
  }
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const std::string name = runs[k].first.substr(0, runs[k].first.find(' '));
    const std::string sub = k == 2 ? "evaluate_stochastic" : name;
    for (const auto& f : runs[k].second) {
      const fs::path a = root / "a" / sub / f, b = root / "b" / sub / f;
      const bool same = fs::exists(a) && fs::exists(b) && slurp(a) == slurp(b) && !slurp(a).empty();
      if (!same) o.check(false, sub + "/" + f + " differs between repeats");
      all_same = all_same && same;
      ++files;
    }
  }
  if (all_ran && all_same) {
    o.check(true, std::to_string(files) + " CSV outputs of train, evaluate, optimize, pso and compare byte-identical on repeat");
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"foilrl acceptance suite"};
  int only = 0;
  Context ctx;
  std::string work = (fs::temp_directory_path() / "foilrl_acceptance").string();
#ifdef FOILRL_CLI_PATH
  ctx.cli = FOILRL_CLI_PATH;
#endif
  app.add_option("--criterion", only, "Run only this criterion (1-9)")->check(CLI::Range(1, 9));
  app.add_option("--work-dir", work, "Scratch directory");
  app.add_option("--cli", ctx.cli, "Path to the foilrl executable");
  app.add_option("--seed", ctx.seed, "Master seed for the training criteria");
  CLI11_PARSE(app, argc, argv);
  ctx.work = work;
  fs::create_directories(ctx.work);

  const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> criteria = {
      {"numerics oracles", numerics},
      {"geometry", geometry},
      {"solvers", solvers},
      {"desk-scale training", desk_training},
      {"sigma sensitivity", sigma_sensitivity},
      {"transfer efficiency", transfer_efficiency},
      {"transfer strategy contracts", strategy_contracts},
      {"PSO baseline", pso_baseline},
      {"determinism", determinism},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (only != 0 && only != n) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      out.check(false, std::string("exception: ") + e.what());
    }
    for (const auto& note : out.notes) std::printf("  %s\n", note.c_str());
    std::printf("criterion %d (%s): %s [%.1f s]\n", n, criteria[i].first.c_str(), out.pass ? "PASS" : "FAIL",
                seconds_since(t0));
    std::fflush(stdout);
    all = all && out.pass;
  }
  return all ? 0 : 1;
}
