#include "foilrl/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "foilrl/errors.hpp"
#include "foilrl/parallel.hpp"

namespace foilrl {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const std::string& path) {
  const fs::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector to_vector(const Observation& o) { return Eigen::Map<const Vector>(o.data(), kObservationSize); }

Action to_action(const Vector& v) {
  Action a;
  for (int k = 0; k < kActionSize; ++k) a[k] = v(k);
  return a;
}

}  // namespace

Dataset load_dataset(const std::string& dir, const ParamBounds& bounds, int n_workers) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("dataset directory '" + dir + "' is not readable");
  std::vector<fs::path> files;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".dat") files.push_back(it->path());
  }
  if (ec) throw IoError("cannot list dataset directory '" + dir + "': " + ec.message());
  std::sort(files.begin(), files.end());

  std::vector<DatasetEntry> entries(files.size());
  std::vector<std::string> errors(files.size());
  parallel_for(files.size(), n_workers, [&](std::size_t i) {
    entries[i].name = files[i].stem().string();
    try {
      const RawAirfoil raw = read_airfoil_file(files[i].string());
      const CstFit fit = fit_cst(raw.points, bounds);
      entries[i].params = fit.params;
      entries[i].residual = fit.residual;
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  Dataset ds;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (errors[i].empty()) {
      ds.entries.push_back(std::move(entries[i]));
    } else {
      ds.skipped.push_back({entries[i].name, errors[i]});
    }
  }
  return ds;
}

Policy mean_policy(const Agent& agent) {
  return [&agent](const Observation& o) { return to_action(agent.act_mean(to_vector(o))); };
}

Policy sampling_policy(const Agent& agent, Rng& rng) {
  return [&agent, &rng](const Observation& o) {
    return to_action(gaussian_sample(agent.act_mean(to_vector(o)), agent.log_std, rng));
  };
}

Policy zero_policy() {
  return [](const Observation&) { return Action{}; };
}

EvalRecord run_episode(AirfoilEnv& env, const DatasetEntry& entry, const Policy& policy,
                       std::vector<TraceRow>* trace) {
  const auto t0 = std::chrono::steady_clock::now();
  EvalRecord rec;
  rec.name = entry.name;
  if (!env.reset_to(entry.params, entry.name)) {
    rec.reason = "initial_solve_failed";
    rec.mt_initial = env.state().initial.mt;
    rec.mt_at_best = rec.mt_initial;
    rec.wall_seconds = seconds_since(t0);
    return rec;
  }
  const StepInfo& init = env.state().initial;
  rec.initial_converged = true;
  rec.initial = init.ratio;
  rec.best = init.ratio;
  rec.mt_initial = init.mt;
  rec.mt_at_best = init.mt;
  if (trace) {
    trace->clear();
    trace->push_back({0, env.state().params, init.cl, init.cd, init.ratio, init.mt, 0.0, true});
  }

  StepReason reason = StepReason::running;
  double inference = 0.0;
  while (!env.state().terminated) {
    const auto ti = std::chrono::steady_clock::now();
    const Action a = policy(env.observe());
    inference += seconds_since(ti);
    const StepOutcome out = env.step(a);
    ++rec.length;
    if (out.info.converged && out.info.ratio > rec.best) {
      rec.best = out.info.ratio;
      rec.mt_at_best = out.info.mt;
      rec.best_step = rec.length;
    }
    if (trace) {
      trace->push_back({rec.length, out.observation, out.info.cl, out.info.cd, out.info.ratio, out.info.mt,
                        out.reward, out.info.converged});
    }
    reason = out.reason;
  }
  rec.reason = to_string(reason);
  rec.improvement = rec.best - rec.initial;
  rec.delta_mt_percent = 100.0 * std::abs(rec.mt_at_best - rec.mt_initial) / rec.mt_initial;
  rec.inference_seconds = inference;
  rec.wall_seconds = seconds_since(t0);
  return rec;
}

std::vector<EvalRecord> evaluate_policy(const Agent& agent, const std::vector<DatasetEntry>& dataset,
                                        const EnvConfig& env_cfg, bool deterministic, std::uint64_t seed,
                                        int n_workers) {
  std::vector<EvalRecord> out(dataset.size());
  parallel_for(dataset.size(), n_workers, [&](std::size_t i) {
    AirfoilEnv env(env_cfg);
    if (deterministic) {
      out[i] = run_episode(env, dataset[i], mean_policy(agent));
    } else {
      Rng rng(derive_seed(seed, 1000 + i));
      out[i] = run_episode(env, dataset[i], sampling_policy(agent, rng));
    }
  });
  return out;
}

double quantile(std::vector<double> v, double q) {
  FOILRL_REQUIRE(!v.empty(), EmptyEvalError, "quantile of empty data");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace {

// Mean and population standard deviation of sorted data, so the result does
// not depend on record order.
std::pair<double, double> mean_std(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

}  // namespace

EvalSummary summarize(const std::vector<EvalRecord>& records) {
  std::vector<double> imp, best, dmt;
  EvalSummary s;
  for (const auto& r : records) {
    if (!r.initial_converged) {
      ++s.n_excluded;
      continue;
    }
    imp.push_back(r.improvement);
    best.push_back(r.best);
    dmt.push_back(r.delta_mt_percent);
  }
  if (imp.empty()) throw EmptyEvalError("no evaluated airfoil converged at step 0");
  s.n_evaluated = imp.size();
  std::tie(s.improvement_mean, s.improvement_std) = mean_std(imp);
  std::tie(s.delta_mt_mean, s.delta_mt_std) = mean_std(dmt);
  s.best_median = quantile(best, 0.5);
  s.best_q1 = quantile(best, 0.25);
  s.best_q3 = quantile(best, 0.75);
  s.best_iqr = s.best_q3 - s.best_q1;
  s.improved_fraction =
      static_cast<double>(std::count_if(imp.begin(), imp.end(), [](double x) { return x > 0.0; })) /
      static_cast<double>(imp.size());
  return s;
}

nlohmann::json to_json(const EvalSummary& s) {
  return {{"n_evaluated", s.n_evaluated},         {"n_excluded", s.n_excluded},
          {"improvement_mean", s.improvement_mean}, {"improvement_std", s.improvement_std},
          {"best_median", s.best_median},           {"best_q1", s.best_q1},
          {"best_q3", s.best_q3},                   {"best_iqr", s.best_iqr},
          {"delta_mt_mean", s.delta_mt_mean},       {"delta_mt_std", s.delta_mt_std},
          {"improved_fraction", s.improved_fraction}};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cells.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back() += c;
    }
  }
  return cells;
}

std::string records_csv_header() {
  return "name,initial,best,improvement,mt_initial,mt_at_best,delta_mt_percent,length,reason,best_step,"
         "initial_converged";
}

void write_records_csv(const std::string& path, const std::vector<EvalRecord>& records) {
  std::ofstream out = open_output(path);
  out << records_csv_header() << "\n";
  for (const auto& r : records) {
    out << csv_field(r.name) << ',' << fmt(r.initial) << ',' << fmt(r.best) << ',' << fmt(r.improvement) << ','
        << fmt(r.mt_initial) << ',' << fmt(r.mt_at_best) << ',' << fmt(r.delta_mt_percent) << ','
        << r.length << ',' << r.reason << ',' << r.best_step << ',' << (r.initial_converged ? 1 : 0)
        << "\n";
  }
}

std::vector<EvalRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open records '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != records_csv_header()) {
    throw IoError("'" + path + "' is not an evaluation records CSV");
  }
  std::vector<EvalRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 11) throw IoError(path + ":" + std::to_string(lineno) + ": expected 11 columns");
    EvalRecord r;
    try {
      r.name = f[0];
      r.initial = std::stod(f[1]);
      r.best = std::stod(f[2]);
      r.improvement = std::stod(f[3]);
      r.mt_initial = std::stod(f[4]);
      r.mt_at_best = std::stod(f[5]);
      r.delta_mt_percent = std::stod(f[6]);
      r.length = std::stoi(f[7]);
      r.reason = f[8];
      r.best_step = std::stoi(f[9]);
      r.initial_converged = f[10] == "1";
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(lineno) + ": bad number");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream out = open_output(path);
  out << "step,cl,cd,ratio,mt,reward,converged";
  for (std::size_t i = 0; i < kNumParams; ++i) out << ",p" << i;
  out << "\n";
  for (const auto& r : rows) {
    out << r.step << ',' << fmt(r.cl) << ',' << fmt(r.cd) << ',' << fmt(r.ratio) << ',' << fmt(r.mt) << ','
        << fmt(r.reward) << ',' << (r.converged ? 1 : 0);
    for (std::size_t i = 0; i < kNumParams; ++i) out << ',' << fmt(r.params[i]);
    out << "\n";
  }
}

ComparisonReport compare_report(const std::vector<EvalRecord>& drl, const std::vector<EvalRecord>& pso) {
  ComparisonReport rep;
  rep.drl = summarize(drl);
  rep.pso = summarize(pso);
  std::map<std::string, const EvalRecord*> by_name;
  for (const auto& r : pso) {
    if (r.initial_converged) by_name[r.name] = &r;
  }
  double drl_t = 0.0, pso_t = 0.0;
  std::vector<const EvalRecord*> sorted;
  for (const auto& r : drl) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->name < b->name; });
  for (const EvalRecord* d : sorted) {
    auto it = by_name.find(d->name);
    if (!d->initial_converged || it == by_name.end()) continue;
    const EvalRecord& p = *it->second;
    ComparisonRow row;
    row.name = d->name;
    row.drl_initial = d->initial;
    row.drl_best = d->best;
    row.pso_best = p.best;
    row.drl_seconds = d->inference_seconds;
    row.pso_seconds = p.inference_seconds;
    if (d->best > p.best) {
      row.winner = "drl";
      ++rep.drl_wins;
    } else if (p.best > d->best) {
      row.winner = "pso";
      ++rep.pso_wins;
    } else {
      row.winner = "tie";
      ++rep.ties;
    }
    drl_t += row.drl_seconds;
    pso_t += row.pso_seconds;
    rep.rows.push_back(row);
  }
  if (!rep.rows.empty()) {
    rep.drl_mean_seconds = drl_t / static_cast<double>(rep.rows.size());
    rep.pso_mean_seconds = pso_t / static_cast<double>(rep.rows.size());
  }
  return rep;
}

void write_comparison_csv(const std::string& path, const ComparisonReport& report) {
  std::ofstream out = open_output(path);
  out << "name,initial,drl_best,pso_best,winner\n";
  for (const auto& r : report.rows) {
    out << csv_field(r.name) << ',' << fmt(r.drl_initial) << ',' << fmt(r.drl_best) << ',' << fmt(r.pso_best) << ','
        << r.winner << "\n";
  }
}

nlohmann::json timing_json(const std::vector<EvalRecord>& records) {
  nlohmann::json rows = nlohmann::json::array();
  double wall = 0.0, inference = 0.0;
  for (const auto& r : records) {
    rows.push_back({{"name", r.name}, {"wall_seconds", r.wall_seconds}, {"inference_seconds", r.inference_seconds}});
    wall += r.wall_seconds;
    inference += r.inference_seconds;
  }
  const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
  return {{"per_airfoil", rows}, {"mean_wall_seconds", wall / n}, {"mean_inference_seconds", inference / n}};
}

void apply_timing(std::vector<EvalRecord>& records, const nlohmann::json& timing) {
  std::map<std::string, std::pair<double, double>> by_name;
  try {
    for (const auto& row : timing.at("per_airfoil")) {
      by_name[row.at("name").get<std::string>()] = {row.at("wall_seconds").get<double>(),
                                                    row.at("inference_seconds").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed timing file: ") + e.what());
  }
  for (auto& r : records) {
    if (auto it = by_name.find(r.name); it != by_name.end()) {
      r.wall_seconds = it->second.first;
      r.inference_seconds = it->second.second;
    }
  }
}

void mark_pareto(std::vector<ParetoPoint>& points) {
  for (auto& p : points) {
    p.on_front = true;
    for (const auto& q : points) {
      const bool no_worse = q.delta_mt <= p.delta_mt && q.best >= p.best;
      const bool better = q.delta_mt < p.delta_mt || q.best > p.best;
      if (no_worse && better) {
        p.on_front = false;
        break;
      }
    }
  }
}

void write_pareto_csv(const std::string& path, const std::vector<ParetoPoint>& points) {
  std::ofstream out = open_output(path);
  out << "label,delta_mt_percent,best,pareto\n";
  for (const auto& p : points) {
    out << csv_field(p.label) << ',' << fmt(p.delta_mt) << ',' << fmt(p.best) << ',' << (p.on_front ? 1 : 0) << "\n";
  }
}

}  // namespace foilrl
