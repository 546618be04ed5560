// foilrl command-line front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "foilrl/checkpoint.hpp"
#include "foilrl/errors.hpp"
#include "foilrl/eval.hpp"
#include "foilrl/plot.hpp"
#include "foilrl/ppo.hpp"
#include "foilrl/pso.hpp"
#include "foilrl/run_config.hpp"
#include "foilrl/transfer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace foilrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Usage errors detected after parsing (bad config values, conflicting flags).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_workers;
  bool svg = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration merged over the defaults");
  cmd->add_option("--out", c.out, "Output directory (default: <output root>/<command>-<config hash>)");
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--n-workers", c.n_workers, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--svg", c.svg, "Also write SVG plots");
}

json base_config(const Common& c) {
  try {
    json cfg = c.config.empty() ? default_run_config() : load_run_config(c.config);
    if (c.seed) cfg["seed"] = *c.seed;
    if (c.n_workers) cfg["n_workers"] = *c.n_workers;
    return cfg;
  } catch (const InvalidParams& e) {
    throw UsageError(e.what());
  }
}

Fidelity parse_fidelity(const std::string& s) {
  try {
    return fidelity_from_string(s);
  } catch (const InvalidParams& e) {
    throw UsageError(e.what());
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Resolves and creates the run directory and writes run_config.json before
// anything else happens.
fs::path start_run(const std::string& command, const Common& c, const json& cfg, const json& inputs) {
  const json record = {{"command", command}, {"config", cfg}, {"inputs", inputs}};
  fs::path out = c.out.empty() ? fs::path(output_root()) / (command + "-" + config_hash(record).substr(0, 8))
                               : fs::path(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  write_text_file((out / "run_config.json").string(), record.dump(2) + "\n");
  std::printf("output directory: %s\n", out.string().c_str());
  return out;
}

std::vector<PoolEntry> reset_pool(const json& cfg, const fs::path& out) {
  return load_reset_pool(resolve_data_path(cfg["env"]["reset_dir"].get<std::string>()), reset_names(cfg),
                         (out / "reset_pool.csv").string());
}

void write_json(const fs::path& p, const json& j) { write_text_file(p.string(), j.dump(2) + "\n"); }

void print_log_row(const TrainLogRow& r) {
  std::printf("update %4d  steps %8lld  episodes %6d  mean reward %10.4f  kl %.4g  solver calls %lld\n", r.update,
              static_cast<long long>(r.timesteps), r.episodes, r.mean_episode_reward, r.stats.approx_kl,
              static_cast<long long>(r.solver_calls));
  std::fflush(stdout);
}

void reward_svg(const fs::path& p, const std::vector<TrainLogRow>& log, const std::string& title) {
  PlotSeries s{"mean episode reward (last 100)", {}, {}, true, {}};
  for (const auto& r : log) {
    s.x.push_back(static_cast<double>(r.timesteps));
    s.y.push_back(r.mean_episode_reward);
  }
  write_text_file(p.string(), svg_chart({title, "timesteps", "reward", false}, {s}));
}

void scatter_svg(const fs::path& p, const std::vector<EvalRecord>& recs, const std::string& title) {
  PlotSeries s{"airfoils", {}, {}, false, {}};
  for (const auto& r : recs) {
    if (!r.initial_converged) continue;
    s.x.push_back(r.initial);
    s.y.push_back(r.best);
  }
  write_text_file(p.string(), svg_chart({title, "initial CL/CD", "best CL/CD", true}, {s}));
}

void print_summary(const char* label, const EvalSummary& s) {
  std::printf("%s: evaluated %zu, excluded %zu\n", label, s.n_evaluated, s.n_excluded);
  std::printf("  improvement  %.3f +- %.3f (improved on %.1f%%)\n", s.improvement_mean, s.improvement_std,
              100.0 * s.improved_fraction);
  std::printf("  best         median %.3f, IQR %.3f\n", s.best_median, s.best_iqr);
  std::printf("  delta MT %%   %.3f +- %.3f\n", s.delta_mt_mean, s.delta_mt_std);
}

// sigma recorded by training unless the flag says otherwise.
double checkpoint_sigma(const AgentCheckpoint& ck, const json& cfg, const std::optional<double>& flag) {
  if (flag) return *flag;
  if (ck.meta.contains("sigma") && ck.meta["sigma"].is_number()) return ck.meta["sigma"].get<double>();
  return cfg["env"]["sigma"].get<double>();
}

DatasetEntry load_single_airfoil(const std::string& path) {
  if (!fs::is_regular_file(path)) throw IoError("cannot read airfoil file: " + path);
  const RawAirfoil raw = read_airfoil_file(path);
  const CstFit fit = fit_cst(raw.points, ParamBounds::defaults());
  return {fs::path(path).stem().string(), fit.params, fit.residual};
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  Common c;
  std::optional<std::string> solver;
  std::optional<double> sigma;
  std::optional<std::int64_t> timesteps;
  std::optional<std::string> preset;
  std::optional<int> n_envs;
  std::optional<int> snapshot_every;
};

int cmd_train(const TrainArgs& a) {
  json cfg = base_config(a.c);
  if (a.solver) cfg["ppo"]["fidelity"] = *a.solver;
  if (a.sigma) cfg["env"]["sigma"] = *a.sigma;
  if (a.preset) cfg["ppo"]["preset"] = *a.preset;
  if (a.timesteps) cfg["ppo"]["total_timesteps"] = *a.timesteps;
  if (a.n_envs) cfg["ppo"]["n_envs"] = *a.n_envs;
  if (a.snapshot_every) cfg["ppo"]["snapshot_every"] = *a.snapshot_every;

  EnvConfig env;
  PpoConfig ppo;
  try {
    env = env_config(cfg, parse_fidelity(cfg["ppo"]["fidelity"].get<std::string>()));
    env.validate();
    ppo = ppo_config(cfg, "ppo");
  } catch (const InvalidParams& e) {
    throw UsageError(e.what());
  }
  const fs::path out = start_run("train", a.c, cfg, json::object());
  env.reset_pool = reset_pool(cfg, out);

  TrainOptions opts;
  opts.checkpoint_out = (out / "checkpoint.bin").string();
  opts.log_csv = (out / "train_log.csv").string();
  opts.snapshot_every = cfg["ppo"]["snapshot_every"].get<int>();
  opts.n_workers = cfg["n_workers"].get<int>();
  opts.on_update = print_log_row;
  opts.meta = {{"preset", cfg["ppo"]["preset"]}, {"config_hash", config_hash(cfg)}};
  const auto seed = cfg["seed"].get<std::uint64_t>();

  TrainResult res;
  try {
    res = train(env, ppo, seed, opts);
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "training diverged: %s\nstate dumped to %s.diverged\n", e.what(),
                 opts.checkpoint_out.c_str());
    return kExitFailure;
  }
  if (a.c.svg) reward_svg(out / "reward_curve.svg", res.log, "training reward");
  std::printf("trained %lld steps (%lld solver calls) in %.1f s\ncheckpoint: %s\n",
              static_cast<long long>(res.timesteps), static_cast<long long>(res.solver_calls), res.wall_seconds,
              opts.checkpoint_out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct FinetuneArgs {
  Common c;
  std::string from;
  std::optional<int> strategy;
  std::optional<std::string> solver;
  std::optional<double> sigma;
  std::optional<std::int64_t> timesteps;
  std::optional<std::string> preset;
  std::optional<int> n_envs;
  std::optional<double> low_cost_ms;
  std::optional<double> high_cost_ms;
  std::optional<std::int64_t> baseline_steps;
};

int cmd_finetune(const FinetuneArgs& a) {
  json cfg = base_config(a.c);
  if (a.strategy) cfg["finetune"]["strategy"] = *a.strategy;
  if (a.solver) cfg["finetune"]["fidelity"] = *a.solver;
  if (a.preset) cfg["finetune"]["preset"] = *a.preset;
  if (a.timesteps) cfg["finetune"]["total_timesteps"] = *a.timesteps;
  if (a.n_envs) cfg["finetune"]["n_envs"] = *a.n_envs;
  if (a.low_cost_ms) cfg["solver"]["low_cost_ms"] = *a.low_cost_ms;
  if (a.high_cost_ms) cfg["solver"]["high_cost_ms"] = *a.high_cost_ms;

  AgentCheckpoint source = load_checkpoint(a.from);
  // The ledger prices pretraining with the configured low-fidelity constant.
  source.meta["nominal_cost_ms"] = cfg["solver"]["low_cost_ms"];
  cfg["env"]["sigma"] = checkpoint_sigma(source, cfg, a.sigma);

  EnvConfig env;
  PpoConfig ppo;
  TlStrategy strategy;
  try {
    strategy = strategy_from_int(cfg["finetune"]["strategy"].get<int>());
    env = env_config(cfg, parse_fidelity(cfg["finetune"]["fidelity"].get<std::string>()));
    env.validate();
    ppo = ppo_config(cfg, "finetune");
  } catch (const InvalidParams& e) {
    throw UsageError(e.what());
  }
  const fs::path out = start_run("finetune", a.c, cfg, {{"from", a.from}});
  env.reset_pool = reset_pool(cfg, out);

  TrainOptions opts;
  opts.checkpoint_out = (out / "checkpoint.bin").string();
  opts.log_csv = (out / "train_log.csv").string();
  opts.n_workers = cfg["n_workers"].get<int>();
  opts.on_update = print_log_row;
  opts.meta = {{"preset", cfg["finetune"]["preset"]}, {"config_hash", config_hash(cfg)}};

  FinetuneResult res;
  try {
    res = finetune(source, strategy, env, ppo, cfg["seed"].get<std::uint64_t>(), opts);
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "fine-tuning diverged: %s\nstate dumped to %s.diverged\n", e.what(),
                 opts.checkpoint_out.c_str());
    return kExitFailure;
  }
  json ledger = res.ledger.to_json();
  ledger["strategy"] = to_int(strategy);
  if (a.baseline_steps) {
    const double free_s = static_cast<double>(*a.baseline_steps) * env.solver.nominal_cost_ms / 1000.0;
    ledger["baseline_steps"] = *a.baseline_steps;
    ledger["baseline_seconds"] = free_s;
    ledger["time_reduction_percent"] = time_reduction(free_s, res.ledger.total_seconds());
  }
  write_json(out / "cost_ledger.json", ledger);
  if (a.c.svg) reward_svg(out / "reward_curve.svg", res.train.log, "fine-tuning reward");

  std::printf("strategy #%d (%s): %lld fine-tuning steps in %.1f s\n", to_int(strategy), to_string(strategy),
              static_cast<long long>(res.train.timesteps), res.train.wall_seconds);
  std::printf("nominal cost: pretrain %.2f s + fine-tune %.2f s = %.2f s\n", res.ledger.pretrain_seconds(),
              res.ledger.finetune_seconds(), res.ledger.total_seconds());
  if (ledger.contains("time_reduction_percent")) {
    std::printf("time reduction vs %lld-step baseline: %.2f%%\n", static_cast<long long>(*a.baseline_steps),
                ledger["time_reduction_percent"].get<double>());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct LedgerArgs {
  std::int64_t pretrain_steps = 0;
  std::int64_t finetune_steps = 0;
  std::int64_t baseline_steps = 0;
  double low_cost_ms = kLowFidelityCostMs;
  double high_cost_ms = kHighFidelityCostMs;
  std::string json_out;
};

int cmd_time_reduction(const LedgerArgs& a) {
  CostLedger l;
  l.pretrain_steps = a.pretrain_steps;
  l.pretrain_cost_ms = a.low_cost_ms;
  l.finetune_steps = a.finetune_steps;
  l.finetune_cost_ms = a.high_cost_ms;
  const double free_s = static_cast<double>(a.baseline_steps) * a.high_cost_ms / 1000.0;
  if (free_s <= 0.0) throw UsageError("--baseline-steps and --high-cost-ms must be positive");
  const double tr = time_reduction(free_s, l.total_seconds());
  json j = l.to_json();
  j["baseline_steps"] = a.baseline_steps;
  j["baseline_seconds"] = free_s;
  j["time_reduction_percent"] = tr;
  if (!a.json_out.empty()) write_json(a.json_out, j);
  std::printf("without transfer: %.2f s\nwith transfer:    %.2f s (pretrain %.2f + fine-tune %.2f)\n", free_s,
              l.total_seconds(), l.pretrain_seconds(), l.finetune_seconds());
  std::printf("time reduction:   %.2f%%\n", tr);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct OptimizeArgs {
  Common c;
  std::string checkpoint;
  std::string airfoil;
  std::optional<std::string> solver;
  std::optional<double> sigma;
  bool stochastic = false;
};

int cmd_optimize(const OptimizeArgs& a) {
  json cfg = base_config(a.c);
  if (a.solver) cfg["eval"]["fidelity"] = *a.solver;
  if (a.stochastic) cfg["eval"]["deterministic"] = false;
  const DatasetEntry entry = load_single_airfoil(a.airfoil);
  const AgentCheckpoint ck = load_checkpoint(a.checkpoint);
  cfg["env"]["sigma"] = checkpoint_sigma(ck, cfg, a.sigma);
  EnvConfig env;
  try {
    env = env_config(cfg, parse_fidelity(cfg["eval"]["fidelity"].get<std::string>()));
  } catch (const InvalidParams& e) {
    throw UsageError(e.what());
  }
  const fs::path out = start_run("optimize", a.c, cfg, {{"checkpoint", a.checkpoint}, {"airfoil", a.airfoil}});

  AirfoilEnv e(env);
  Rng rng(derive_seed(cfg["seed"].get<std::uint64_t>(), 1000));
  const Policy policy =
      cfg["eval"]["deterministic"].get<bool>() ? mean_policy(ck.agent) : sampling_policy(ck.agent, rng);
  std::vector<TraceRow> trace;
  const EvalRecord rec = run_episode(e, entry, policy, &trace);
  write_trace_csv((out / "trace.csv").string(), trace);
  write_records_csv((out / "records.csv").string(), {rec});

  json metrics = {{"name", rec.name},
                  {"fit_residual", entry.residual},
                  {"initial", rec.initial},
                  {"best", rec.best},
                  {"improvement", rec.improvement},
                  {"mt_initial", rec.mt_initial},
                  {"mt_at_best", rec.mt_at_best},
                  {"delta_mt_percent", rec.delta_mt_percent},
                  {"length", rec.length},
                  {"best_step", rec.best_step},
                  {"reason", rec.reason},
                  {"inference_seconds", rec.inference_seconds},
                  {"solver_seconds", rec.wall_seconds - rec.inference_seconds}};
  write_json(out / "metrics.json", metrics);
  if (!rec.initial_converged) {
    std::fprintf(stderr, "initial solve of %s failed\n", rec.name.c_str());
    return kExitFailure;
  }
  if (trace.size() > static_cast<std::size_t>(rec.best_step)) {
    const AirfoilGeometry g = cst_to_geometry(trace[rec.best_step].params);
    std::ofstream dat(out / "best.dat");
    write_selig(dat, rec.name + "_optimized", to_selig_loop(g));
  }
  if (a.c.svg) {
    PlotSeries s0{"initial", {}, {}, true, {}}, s1{"best (step " + std::to_string(rec.best_step) + ")", {}, {}, true, {}};
    for (const auto& [s, row] : {std::pair{&s0, &trace.front()}, std::pair{&s1, &trace[rec.best_step]}}) {
      for (const auto& p : to_selig_loop(cst_to_geometry(row->params))) {
        s->x.push_back(p.x);
        s->y.push_back(p.y);
      }
    }
    write_text_file((out / "shape.svg").string(), svg_chart({rec.name, "x/c", "y/c", false}, {s0, s1}));
  }
  std::printf("%s: CL/CD %.3f -> best %.3f at step %d (improvement %.3f), delta MT %.2f%%\n", rec.name.c_str(),
              rec.initial, rec.best, rec.best_step, rec.improvement, rec.delta_mt_percent);
  std::printf("episode length %d (%s); policy inference %.6f s, solver %.3f s\n", rec.length, rec.reason.c_str(),
              rec.inference_seconds, rec.wall_seconds - rec.inference_seconds);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  Common c;
  std::string checkpoint;
  std::optional<std::string> dataset;
  std::optional<std::string> solver;
  std::optional<double> sigma;
  bool stochastic = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
  json cfg = base_config(a.c);
  if (a.dataset) cfg["eval"]["dataset"] = *a.dataset;
  if (a.solver) cfg["eval"]["fidelity"] = *a.solver;
  if (a.stochastic) cfg["eval"]["deterministic"] = false;
  const AgentCheckpoint ck = load_checkpoint(a.checkpoint);
  cfg["env"]["sigma"] = checkpoint_sigma(ck, cfg, a.sigma);
  EnvConfig env;
  try {
    env = env_config(cfg, parse_fidelity(cfg["eval"]["fidelity"].get<std::string>()));
  } catch (const InvalidParams& e) {
    throw UsageError(e.what());
  }
  const std::string dir = a.dataset ? *a.dataset : resolve_data_path(cfg["eval"]["dataset"].get<std::string>());
  const fs::path out = start_run("evaluate", a.c, cfg, {{"checkpoint", a.checkpoint}, {"dataset", dir}});
  const int workers = cfg["n_workers"].get<int>();

  const Dataset ds = load_dataset(dir, ParamBounds::defaults(), workers);
  for (const auto& s : ds.skipped) std::fprintf(stderr, "skipped %s: %s\n", s.name.c_str(), s.reason.c_str());
  const auto recs = evaluate_policy(ck.agent, ds.entries, env, cfg["eval"]["deterministic"].get<bool>(),
                                    cfg["seed"].get<std::uint64_t>(), workers);
  write_records_csv((out / "records.csv").string(), recs);
  write_json(out / "timing.json", timing_json(recs));
  const EvalSummary s = summarize(recs);
  json summary = to_json(s);
  summary["skipped_files"] = ds.skipped.size();
  write_json(out / "summary.json", summary);
  if (a.c.svg) scatter_svg(out / "best_vs_initial.svg", recs, "best vs initial CL/CD");
  print_summary("policy", s);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PsoArgs {
  Common c;
  std::string airfoil;
  std::string dataset;
  std::optional<double> keep_thickness;
  std::optional<int> iterations;
  std::optional<int> swarm_size;
  std::optional<std::string> solver;
};

int cmd_pso(const PsoArgs& a) {
  json cfg = base_config(a.c);
  if (a.keep_thickness) {
    cfg["pso"]["keep_thickness"] = true;
    cfg["pso"]["thickness_tolerance"] = *a.keep_thickness;
  }
  if (a.iterations) cfg["pso"]["iterations"] = *a.iterations;
  if (a.swarm_size) cfg["pso"]["swarm_size"] = *a.swarm_size;
  if (a.solver) cfg["pso"]["fidelity"] = *a.solver;
  PsoConfig pcfg;
  SolverConfig scfg;
  FlowConditions flow;
  try {
    pcfg = pso_config(cfg);
    scfg = solver_config(cfg, parse_fidelity(cfg["pso"]["fidelity"].get<std::string>()));
    flow = flow_conditions(cfg);
  } catch (const InvalidParams& e) {
    throw UsageError(e.what());
  }
  const fs::path out =
      start_run("pso", a.c, cfg, {{"airfoil", a.airfoil.empty() ? json() : json(a.airfoil)},
                                  {"dataset", a.dataset.empty() ? json() : json(a.dataset)}});

  std::vector<DatasetEntry> entries;
  if (!a.airfoil.empty()) {
    entries.push_back(load_single_airfoil(a.airfoil));
  } else {
    const Dataset ds = load_dataset(a.dataset, ParamBounds::defaults(), cfg["n_workers"].get<int>());
    for (const auto& s : ds.skipped) std::fprintf(stderr, "skipped %s: %s\n", s.name.c_str(), s.reason.c_str());
    entries = ds.entries;
  }

  const AeroSolver solver = make_solver(scfg, flow);
  const auto seed = cfg["seed"].get<std::uint64_t>();
  std::vector<EvalRecord> recs;
  std::ofstream trace(out / "trace.csv");
  std::ofstream best(out / "best_params.csv");
  if (!trace || !best) throw IoError("cannot write PSO outputs in " + out.string());
  trace << "name,iteration,gbest\n";
  best << "name,fitness";
  for (std::size_t d = 0; d < kNumParams; ++d) best << ",p" << d;
  best << "\n";

  for (std::size_t i = 0; i < entries.size(); ++i) {
    const DatasetEntry& en = entries[i];
    EvalRecord rec;
    rec.name = en.name;
    const AirfoilGeometry g0 = cst_to_geometry(en.params);
    rec.mt_initial = max_thickness(g0);
    rec.mt_at_best = rec.mt_initial;
    Rng rng(derive_seed(seed, 1000 + i));
    PsoResult res;
    try {
      res = pso_optimize_airfoil(en.params, solver, pcfg, ParamBounds::defaults(), rng);
    } catch (const SeedError& e) {
      if (!a.airfoil.empty()) throw;
      rec.reason = "initial_solve_failed";
      recs.push_back(rec);
      std::fprintf(stderr, "%s: %s\n", en.name.c_str(), e.what());
      continue;
    }
    rec.initial_converged = true;
    rec.initial = res.trace.front() == -std::numeric_limits<double>::infinity() ? 0.0 : lift_drag_ratio(solver(g0));
    rec.best = std::max(res.best_fitness, rec.initial);
    rec.improvement = rec.best - rec.initial;
    rec.mt_at_best = max_thickness(cst_to_geometry(res.best));
    rec.delta_mt_percent = 100.0 * std::abs(rec.mt_at_best - rec.mt_initial) / rec.mt_initial;
    rec.length = pcfg.iterations;
    rec.reason = "completed";
    for (std::size_t k = 0; k < res.trace.size(); ++k) {
      if (res.trace[k] == res.best_fitness) {
        rec.best_step = static_cast<int>(k);
        break;
      }
    }
    rec.wall_seconds = res.wall_seconds;
    rec.inference_seconds = res.wall_seconds;
    for (std::size_t k = 0; k < res.trace.size(); ++k) trace << csv_field(en.name) << ',' << k << ',' << fmt(res.trace[k]) << "\n";
    best << csv_field(en.name) << ',' << fmt(res.best_fitness);
    for (std::size_t d = 0; d < kNumParams; ++d) best << ',' << fmt(res.best[d]);
    best << "\n";
    std::printf("%s: CL/CD %.3f -> %.3f (delta MT %.2f%%, %lld fitness calls, %.2f s)\n", en.name.c_str(),
                rec.initial, rec.best, rec.delta_mt_percent, static_cast<long long>(res.fitness_calls),
                res.wall_seconds);
    std::fflush(stdout);
    if (a.c.svg && entries.size() == 1) {
      PlotSeries s{"global best", {}, {}, true, {}};
      for (std::size_t k = 0; k < res.trace.size(); ++k) {
        s.x.push_back(static_cast<double>(k));
        s.y.push_back(res.trace[k]);
      }
      write_text_file((out / "convergence.svg").string(), svg_chart({en.name, "iteration", "CL/CD", false}, {s}));
    }
    recs.push_back(rec);
  }
  write_records_csv((out / "records.csv").string(), recs);
  write_json(out / "timing.json", timing_json(recs));
  try {
    const EvalSummary s = summarize(recs);
    write_json(out / "summary.json", to_json(s));
    print_summary("pso", s);
  } catch (const EmptyEvalError&) {
    if (!entries.empty()) throw;
    std::printf("no airfoils\n");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CompareArgs {
  Common c;
  std::string drl;
  std::string pso;
  std::string drl_timing;
  std::string pso_timing;
  std::vector<std::string> sweep;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
}

int cmd_compare(const CompareArgs& a) {
  if (a.drl.empty() != a.pso.empty()) throw UsageError("--drl and --pso go together");
  if (a.drl.empty() && a.sweep.empty()) throw UsageError("nothing to compare: give --drl/--pso or --sweep");
  std::vector<std::pair<std::string, std::string>> sweep;
  for (const auto& s : a.sweep) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--sweep expects label=records.csv, got '" + s + "'");
    sweep.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  json cfg = base_config(a.c);
  const fs::path out = start_run(
      "compare", a.c, cfg, {{"drl", a.drl}, {"pso", a.pso}, {"sweep", a.sweep}});

  if (!a.drl.empty()) {
    auto drl = read_records_csv(a.drl);
    auto pso = read_records_csv(a.pso);
    if (!a.drl_timing.empty()) apply_timing(drl, read_json_file(a.drl_timing));
    if (!a.pso_timing.empty()) apply_timing(pso, read_json_file(a.pso_timing));
    const ComparisonReport rep = compare_report(drl, pso);
    write_comparison_csv((out / "comparison.csv").string(), rep);
    json j = {{"drl", to_json(rep.drl)},   {"pso", to_json(rep.pso)},     {"airfoils", rep.rows.size()},
              {"drl_wins", rep.drl_wins}, {"pso_wins", rep.pso_wins},   {"ties", rep.ties},
              {"drl_mean_seconds", rep.drl_mean_seconds}, {"pso_mean_seconds", rep.pso_mean_seconds}};
    if (rep.drl_mean_seconds > 0.0) j["speedup"] = rep.pso_mean_seconds / rep.drl_mean_seconds;
    write_json(out / "comparison.json", j);

    std::printf("%-24s %10s %10s %10s  winner\n", "airfoil", "initial", "drl", "pso");
    for (const auto& r : rep.rows) {
      std::printf("%-24s %10.3f %10.3f %10.3f  %s\n", r.name.c_str(), r.drl_initial, r.drl_best, r.pso_best,
                  r.winner.c_str());
    }
    print_summary("drl", rep.drl);
    print_summary("pso", rep.pso);
    std::printf("wins: drl %d, pso %d, ties %d\n", rep.drl_wins, rep.pso_wins, rep.ties);
    if (rep.drl_mean_seconds > 0.0) {
      std::printf("mean time per airfoil: drl %.6f s (inference), pso %.3f s; pso/drl = %.4g\n",
                  rep.drl_mean_seconds, rep.pso_mean_seconds, rep.pso_mean_seconds / rep.drl_mean_seconds);
    }
  }

  if (!sweep.empty()) {
    std::vector<ParetoPoint> pts;
    for (const auto& [label, path] : sweep) {
      const EvalSummary s = summarize(read_records_csv(path));
      pts.push_back({label, s.delta_mt_mean, s.best_median, false});
    }
    mark_pareto(pts);
    write_pareto_csv((out / "pareto.csv").string(), pts);
    for (const auto& p : pts) {
      std::printf("%-12s delta MT %8.3f  best %9.3f  %s\n", p.label.c_str(), p.delta_mt, p.best,
                  p.on_front ? "pareto" : "");
    }
    if (a.c.svg) {
      PlotSeries s{"runs (filled: Pareto front)", {}, {}, false, {}};
      for (const auto& p : pts) {
        s.x.push_back(p.delta_mt);
        s.y.push_back(p.best);
        s.highlight.push_back(p.on_front);
      }
      write_text_file((out / "pareto.svg").string(), svg_chart({"best vs delta MT", "delta MT %", "best CL/CD", false}, {s}));
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_export(const std::string& ckpt, const std::string& out) {
  const AgentCheckpoint ck = load_checkpoint(ckpt);
  write_text_file(out, export_weights(ck).dump() + "\n");
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

int cmd_import(const std::string& weights, const std::string& out) {
  const AgentCheckpoint ck = import_weights(read_json_file(weights));
  save_checkpoint(ck, out);
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

int cmd_init_config(const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << default_run_config().dump(2) << "\n";
  } else {
    write_text_file(out, default_run_config().dump(2) + "\n");
    std::printf("wrote %s\n", out.c_str());
  }
  return kExitOk;
}

int cmd_fit(const std::string& airfoil, const std::string& out) {
  const DatasetEntry e = load_single_airfoil(airfoil);
  const AirfoilGeometry g = cst_to_geometry(e.params);
  json j = {{"name", e.name},
            {"residual", e.residual},
            {"max_thickness", max_thickness(g)},
            {"params", e.params.values()}};
  if (!out.empty()) write_json(out, j);
  std::printf("%s: residual %.3g, max thickness %.4f\n", e.name.c_str(), e.residual, max_thickness(g));
  for (std::size_t i = 0; i < kNumParams; ++i) std::printf("  p%-2zu % .8f\n", i, e.params[i]);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Airfoil shape optimization with PPO agents, transfer learning and a PSO baseline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "foilrl 0.1.0");

  const std::vector<std::string> solvers = {"high", "low"};
  const auto& presets = PpoConfig::preset_names();
  std::function<int()> run;

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train an agent with PPO");
  add_common(train_cmd, ta.c);
  train_cmd->add_option("--solver", ta.solver, "Solver fidelity")->check(CLI::IsMember(solvers));
  train_cmd->add_option("--sigma", ta.sigma, "Thickness kernel width")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--timesteps", ta.timesteps, "Total environment steps")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--preset", ta.preset, "Hyperparameter preset")->check(CLI::IsMember(presets));
  train_cmd->add_option("--n-envs", ta.n_envs, "Parallel environments")->check(CLI::PositiveNumber);
  train_cmd->add_option("--snapshot-every", ta.snapshot_every, "Updates between checkpoint snapshots")
      ->check(CLI::NonNegativeNumber);
  train_cmd->callback([&] { run = [&] { return cmd_train(ta); }; });

  FinetuneArgs fa;
  auto* ft_cmd = app.add_subcommand("finetune", "Fine-tune a pretrained agent with a transfer strategy");
  add_common(ft_cmd, fa.c);
  ft_cmd->add_option("--from", fa.from, "Source checkpoint")->required();
  ft_cmd->add_option("--strategy", fa.strategy, "Transfer strategy 1-4")->check(CLI::IsMember({1, 2, 3, 4}));
  ft_cmd->add_option("--solver", fa.solver, "Solver fidelity")->check(CLI::IsMember(solvers));
  ft_cmd->add_option("--sigma", fa.sigma, "Thickness kernel width (default: from the checkpoint)")
      ->check(CLI::NonNegativeNumber);
  ft_cmd->add_option("--timesteps", fa.timesteps, "Fine-tuning steps")->check(CLI::NonNegativeNumber);
  ft_cmd->add_option("--preset", fa.preset, "Hyperparameter preset")->check(CLI::IsMember(presets));
  ft_cmd->add_option("--n-envs", fa.n_envs, "Parallel environments")->check(CLI::PositiveNumber);
  ft_cmd->add_option("--low-cost-ms", fa.low_cost_ms, "Nominal low-fidelity cost per call")
      ->check(CLI::NonNegativeNumber);
  ft_cmd->add_option("--high-cost-ms", fa.high_cost_ms, "Nominal high-fidelity cost per call")
      ->check(CLI::NonNegativeNumber);
  ft_cmd->add_option("--baseline-steps", fa.baseline_steps, "Steps of a no-transfer run for the time reduction")
      ->check(CLI::PositiveNumber);
  ft_cmd->callback([&] { run = [&] { return cmd_finetune(fa); }; });

  LedgerArgs la;
  auto* tr_cmd = app.add_subcommand("time-reduction", "Nominal solver-time saving of a transfer run");
  tr_cmd->add_option("--pretrain-steps", la.pretrain_steps, "Low-fidelity pretraining steps")
      ->required()->check(CLI::NonNegativeNumber);
  tr_cmd->add_option("--finetune-steps", la.finetune_steps, "High-fidelity fine-tuning steps")
      ->required()->check(CLI::NonNegativeNumber);
  tr_cmd->add_option("--baseline-steps", la.baseline_steps, "High-fidelity steps without transfer")
      ->required()->check(CLI::PositiveNumber);
  tr_cmd->add_option("--low-cost-ms", la.low_cost_ms, "Low-fidelity cost per call")->check(CLI::NonNegativeNumber);
  tr_cmd->add_option("--high-cost-ms", la.high_cost_ms, "High-fidelity cost per call")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--json", la.json_out, "Write the ledger here");
  tr_cmd->callback([&] { run = [&] { return cmd_time_reduction(la); }; });

  OptimizeArgs oa;
  auto* opt_cmd = app.add_subcommand("optimize", "Run one policy episode on an airfoil file");
  add_common(opt_cmd, oa.c);
  opt_cmd->add_option("--checkpoint", oa.checkpoint, "Agent checkpoint")->required();
  opt_cmd->add_option("--airfoil", oa.airfoil, "Selig or Lednicer .dat file")->required();
  opt_cmd->add_option("--solver", oa.solver, "Solver fidelity")->check(CLI::IsMember(solvers));
  opt_cmd->add_option("--sigma", oa.sigma, "Thickness kernel width (default: from the checkpoint)")
      ->check(CLI::NonNegativeNumber);
  opt_cmd->add_flag("--stochastic", oa.stochastic, "Sample actions instead of using the mean");
  opt_cmd->callback([&] { run = [&] { return cmd_optimize(oa); }; });

  EvaluateArgs ea;
  auto* ev_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a directory of airfoils");
  add_common(ev_cmd, ea.c);
  ev_cmd->add_option("--checkpoint", ea.checkpoint, "Agent checkpoint")->required();
  ev_cmd->add_option("--dataset", ea.dataset, "Directory of .dat files (default: bundled set)");
  ev_cmd->add_option("--solver", ea.solver, "Solver fidelity")->check(CLI::IsMember(solvers));
  ev_cmd->add_option("--sigma", ea.sigma, "Thickness kernel width (default: from the checkpoint)")
      ->check(CLI::NonNegativeNumber);
  ev_cmd->add_flag("--stochastic", ea.stochastic, "Sample actions instead of using the mean");
  ev_cmd->callback([&] { run = [&] { return cmd_evaluate(ea); }; });

  PsoArgs pa;
  auto* pso_cmd = app.add_subcommand("pso", "Particle swarm baseline");
  add_common(pso_cmd, pa.c);
  auto* pso_airfoil = pso_cmd->add_option("--airfoil", pa.airfoil, "Seed airfoil .dat file");
  auto* pso_dataset = pso_cmd->add_option("--dataset", pa.dataset, "Directory of seed airfoils");
  pso_airfoil->excludes(pso_dataset);
  pso_cmd->add_option("--keep-thickness", pa.keep_thickness, "Hold max thickness within this relative tolerance")
      ->check(CLI::NonNegativeNumber);
  pso_cmd->add_option("--iterations", pa.iterations, "Swarm iterations")->check(CLI::NonNegativeNumber);
  pso_cmd->add_option("--swarm-size", pa.swarm_size, "Particles")->check(CLI::PositiveNumber);
  pso_cmd->add_option("--solver", pa.solver, "Solver fidelity")->check(CLI::IsMember(solvers));
  pso_cmd->callback([&] {
    if (pa.airfoil.empty() && pa.dataset.empty()) throw CLI::ValidationError("pso", "give --airfoil or --dataset");
    run = [&] { return cmd_pso(pa); };
  });

  CompareArgs ca;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare record CSVs and build Pareto data");
  add_common(cmp_cmd, ca.c);
  cmp_cmd->add_option("--drl", ca.drl, "Agent records.csv");
  cmp_cmd->add_option("--pso", ca.pso, "PSO records.csv");
  cmp_cmd->add_option("--drl-timing", ca.drl_timing, "Agent timing.json");
  cmp_cmd->add_option("--pso-timing", ca.pso_timing, "PSO timing.json");
  cmp_cmd->add_option("--sweep", ca.sweep, "label=records.csv, repeatable");
  cmp_cmd->callback([&] { run = [&] { return cmd_compare(ca); }; });

  std::string ex_ckpt, ex_out;
  auto* ex_cmd = app.add_subcommand("export-weights", "Write checkpoint weights as JSON");
  ex_cmd->add_option("--checkpoint", ex_ckpt, "Agent checkpoint")->required();
  ex_cmd->add_option("--out", ex_out, "Output JSON file")->required();
  ex_cmd->callback([&] { run = [&] { return cmd_export(ex_ckpt, ex_out); }; });

  std::string im_weights, im_out;
  auto* im_cmd = app.add_subcommand("import-weights", "Build a checkpoint from exported JSON weights");
  im_cmd->add_option("--weights", im_weights, "Weights JSON")->required();
  im_cmd->add_option("--out", im_out, "Output checkpoint")->required();
  im_cmd->callback([&] { run = [&] { return cmd_import(im_weights, im_out); }; });

  std::string ic_out;
  auto* ic_cmd = app.add_subcommand("init-config", "Print or write the default configuration");
  ic_cmd->add_option("--out", ic_out, "Destination file (default: standard output)");
  ic_cmd->callback([&] { run = [&] { return cmd_init_config(ic_out); }; });

  std::string fit_airfoil, fit_out;
  auto* fit_cmd = app.add_subcommand("fit", "Fit CST parameters to an airfoil file");
  fit_cmd->add_option("--airfoil", fit_airfoil, "Selig or Lednicer .dat file")->required();
  fit_cmd->add_option("--out", fit_out, "Write the fit as JSON");
  fit_cmd->callback([&] { run = [&] { return cmd_fit(fit_airfoil, fit_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return run();
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const foilrl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
}
