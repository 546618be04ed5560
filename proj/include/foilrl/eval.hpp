#pragma once

// Dataset ingestion, policy evaluation episodes, summary statistics and
// DRL/PSO comparison tables.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "foilrl/env.hpp"
#include "foilrl/nn.hpp"

namespace foilrl {

struct DatasetEntry {
  std::string name;
  CstParams params;
  double residual = 0.0;
};

struct SkippedFile {
  std::string name;
  std::string reason;
};

struct Dataset {
  std::vector<DatasetEntry> entries;  // sorted by name
  std::vector<SkippedFile> skipped;
};

// Every `*.dat` file in `dir`, fitted to CST. Unparseable or unfittable
// files are skipped with a reason. IoError when `dir` is not a readable
// directory.
Dataset load_dataset(const std::string& dir, const ParamBounds& bounds = ParamBounds::defaults(),
                     int n_workers = 1);

struct EvalRecord {
  std::string name;
  double initial = 0.0;  // CL/CD at step 0
  double best = 0.0;     // best CL/CD over the episode, step 0 included
  double improvement = 0.0;
  double mt_initial = 0.0;
  double mt_at_best = 0.0;
  double delta_mt_percent = 0.0;
  int length = 0;
  std::string reason;
  int best_step = 0;
  bool initial_converged = false;
  double wall_seconds = 0.0;       // not part of the CSV
  double inference_seconds = 0.0;  // policy forward passes only; not part of the CSV
};

struct EvalSummary {
  std::size_t n_evaluated = 0;
  std::size_t n_excluded = 0;
  double improvement_mean = 0.0;
  double improvement_std = 0.0;
  double best_median = 0.0;
  double best_q1 = 0.0;
  double best_q3 = 0.0;
  double best_iqr = 0.0;
  double delta_mt_mean = 0.0;
  double delta_mt_std = 0.0;
  double improved_fraction = 0.0;  // improvement > 0
};

using Policy = std::function<Action(const Observation&)>;

Policy mean_policy(const Agent& agent);
Policy sampling_policy(const Agent& agent, Rng& rng);
Policy zero_policy();

struct TraceRow {
  int step = 0;
  CstParams params;
  double cl = 0.0;
  double cd = 0.0;
  double ratio = 0.0;
  double mt = 0.0;
  double reward = 0.0;
  bool converged = false;
};

// One episode from `entry`; `trace` (optional) receives step 0 and every
// later step.
EvalRecord run_episode(AirfoilEnv& env, const DatasetEntry& entry, const Policy& policy,
                       std::vector<TraceRow>* trace = nullptr);

// One episode per entry. Deterministic episodes use the mean action;
// otherwise each airfoil gets its own sampling stream derived from `seed`.
std::vector<EvalRecord> evaluate_policy(const Agent& agent, const std::vector<DatasetEntry>& dataset,
                                        const EnvConfig& env_cfg, bool deterministic = true,
                                        std::uint64_t seed = 0, int n_workers = 1);

// Over records whose initial solve converged; EmptyEvalError when none did.
EvalSummary summarize(const std::vector<EvalRecord>& records);

// Linear-interpolation quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> v, double q);

nlohmann::json to_json(const EvalSummary& s);

// Quotes a CSV cell when it holds a comma, quote or line break.
std::string csv_field(const std::string& s);
// Splits one CSV line, honouring quoted cells.
std::vector<std::string> split_csv_line(const std::string& line);

std::string records_csv_header();
void write_records_csv(const std::string& path, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_records_csv(const std::string& path);
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);

// Wall and inference times live in a JSON side file so the record CSVs stay
// reproducible byte for byte.
nlohmann::json timing_json(const std::vector<EvalRecord>& records);
// Copies times back onto records by name; unknown names are left alone.
void apply_timing(std::vector<EvalRecord>& records, const nlohmann::json& timing);

struct ComparisonRow {
  std::string name;
  double drl_initial = 0.0;
  double drl_best = 0.0;
  double pso_best = 0.0;
  std::string winner;  // "drl", "pso" or "tie"
  // inference_seconds of each record: policy forward passes for the agent,
  // the whole swarm run for PSO.
  double drl_seconds = 0.0;
  double pso_seconds = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;  // airfoils converged in both sets, by name
  EvalSummary drl;
  EvalSummary pso;
  double drl_mean_seconds = 0.0;
  double pso_mean_seconds = 0.0;
  int drl_wins = 0;
  int pso_wins = 0;
  int ties = 0;
};

ComparisonReport compare_report(const std::vector<EvalRecord>& drl, const std::vector<EvalRecord>& pso);
void write_comparison_csv(const std::string& path, const ComparisonReport& report);

struct ParetoPoint {
  std::string label;
  double delta_mt = 0.0;  // minimized
  double best = 0.0;      // maximized
  bool on_front = false;
};

// Flags the non-dominated points.
void mark_pareto(std::vector<ParetoPoint>& points);
void write_pareto_csv(const std::string& path, const std::vector<ParetoPoint>& points);

}  // namespace foilrl
