#include "foilrl/run_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "foilrl/errors.hpp"

#ifndef FOILRL_DEFAULT_DATA_DIR
#define FOILRL_DEFAULT_DATA_DIR "data"
#endif

namespace foilrl {

namespace {

using nlohmann::json;

const std::set<std::string>& ppo_fields() {
  static const std::set<std::string> f = {
      "total_timesteps", "learning_rate", "n_steps",      "batch_size",   "n_epochs",
      "gamma",           "gae_lambda",    "clip_range",   "entropy_coef", "value_coef",
      "max_grad_norm",   "n_envs"};
  return f;
}

void merge_into(json& base, const json& patch, const std::string& path) {
  FOILRL_REQUIRE(patch.is_object(), InvalidParams, "config: '" + path + "' must be an object");
  const bool open = path == "ppo" || path == "finetune";
  for (auto& [key, value] : patch.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) {
      FOILRL_REQUIRE(open && ppo_fields().count(key), InvalidParams, "config: unknown key '" + where + "'");
      base[key] = value;
      continue;
    }
    json& slot = base[key];
    if (slot.is_object()) {
      merge_into(slot, value, where);
    } else {
      FOILRL_REQUIRE(!value.is_object(), InvalidParams, "config: '" + where + "' is not a section");
      slot = value;
    }
  }
}

template <typename T>
T get(const json& cfg, const char* section, const char* key) {
  try {
    return cfg.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidParams(std::string("config: bad or missing '") + section + "." + key + "'");
  }
}

}  // namespace

json default_run_config() {
  return {
      {"version", kRunConfigVersion},
      {"seed", 1},
      {"n_workers", 1},
      {"flow", {{"angle_of_attack_deg", 2.0}, {"reynolds", 1.0e6}, {"mach", 0.5}}},
      {"solver",
       {{"panels", 255},
        {"max_iterations", 200},
        {"tolerance", 1e-6},
        {"timeout_s", 30.0},
        {"max_separated_fraction", 0.3},
        {"high_cost_ms", kHighFidelityCostMs},
        {"low_cost_ms", kLowFidelityCostMs}}},
      {"env",
       {{"sigma", 0.0},
        {"episode_max_length", 100},
        {"max_reset_attempts", 64},
        {"reset_dir", "airfoils/reset"},
        {"reset_names", json::array()}}},
      {"ppo", {{"preset", "from-scratch"}, {"fidelity", "high"}, {"snapshot_every", 0}}},
      {"finetune", {{"preset", "finetune"}, {"fidelity", "high"}, {"strategy", 1}}},
      {"pso",
       {{"swarm_size", 30},
        {"iterations", 700},
        {"inertia", 0.729},
        {"cognitive", 1.49},
        {"social", 1.49},
        {"velocity_clamp", 0.2},
        {"init_spread", 0.1},
        {"keep_thickness", false},
        {"thickness_tolerance", 0.01},
        {"fidelity", "high"}}},
      {"eval", {{"dataset", "airfoils/uiuc"}, {"fidelity", "high"}, {"deterministic", true}}},
  };
}

void merge_run_config(json& base, const json& patch) { merge_into(base, patch, ""); }

json load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path);
  json patch;
  try {
    patch = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidParams("config file " + path + ": " + e.what());
  }
  json cfg = default_run_config();
  merge_run_config(cfg, patch);
  FOILRL_REQUIRE(cfg.value("version", 0) == kRunConfigVersion, InvalidParams,
                 "config: unsupported version");
  return cfg;
}

std::string data_dir() {
  if (const char* d = std::getenv("FOILRL_DATA_DIR"); d && *d) return d;
  return FOILRL_DEFAULT_DATA_DIR;
}

std::string output_root() {
  if (const char* d = std::getenv("FOILRL_OUTPUT_ROOT"); d && *d) return d;
  return "runs";
}

std::string resolve_data_path(const std::string& p) {
  const std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (std::filesystem::path(data_dir()) / path).string();
}

SolverConfig solver_config(const json& cfg, Fidelity fidelity) {
  SolverConfig s = fidelity == Fidelity::high ? SolverConfig::high_fidelity() : SolverConfig::low_fidelity();
  s.panels = get<int>(cfg, "solver", "panels");
  s.max_iterations = get<int>(cfg, "solver", "max_iterations");
  s.tolerance = get<double>(cfg, "solver", "tolerance");
  s.timeout_s = get<double>(cfg, "solver", "timeout_s");
  s.max_separated_fraction = get<double>(cfg, "solver", "max_separated_fraction");
  s.nominal_cost_ms = get<double>(cfg, "solver", fidelity == Fidelity::high ? "high_cost_ms" : "low_cost_ms");
  s.validate();
  return s;
}

FlowConditions flow_conditions(const json& cfg) {
  FlowConditions f;
  f.angle_of_attack_deg = get<double>(cfg, "flow", "angle_of_attack_deg");
  f.reynolds = get<double>(cfg, "flow", "reynolds");
  f.mach = get<double>(cfg, "flow", "mach");
  f.validate();
  return f;
}

EnvConfig env_config(const json& cfg, Fidelity fidelity) {
  EnvConfig e;
  e.sigma = get<double>(cfg, "env", "sigma");
  e.episode_max_length = get<int>(cfg, "env", "episode_max_length");
  e.max_reset_attempts = get<int>(cfg, "env", "max_reset_attempts");
  e.solver = solver_config(cfg, fidelity);
  e.flow = flow_conditions(cfg);
  return e;
}

std::vector<std::string> reset_names(const json& cfg) {
  auto names = get<std::vector<std::string>>(cfg, "env", "reset_names");
  return names.empty() ? default_reset_names() : names;
}

PpoConfig ppo_config(const json& cfg, const std::string& section) {
  const json& s = cfg.at(section);
  PpoConfig p = PpoConfig::preset(s.value("preset", std::string("from-scratch")));
  try {
    if (s.contains("total_timesteps")) p.total_timesteps = s["total_timesteps"].get<std::int64_t>();
    if (s.contains("learning_rate")) p.learning_rate = s["learning_rate"].get<double>();
    if (s.contains("n_steps")) p.n_steps = s["n_steps"].get<int>();
    if (s.contains("batch_size")) p.batch_size = s["batch_size"].get<int>();
    if (s.contains("n_epochs")) p.n_epochs = s["n_epochs"].get<int>();
    if (s.contains("gamma")) p.gamma = s["gamma"].get<double>();
    if (s.contains("gae_lambda")) p.gae_lambda = s["gae_lambda"].get<double>();
    if (s.contains("clip_range")) p.clip_range = s["clip_range"].get<double>();
    if (s.contains("entropy_coef")) p.entropy_coef = s["entropy_coef"].get<double>();
    if (s.contains("value_coef")) p.value_coef = s["value_coef"].get<double>();
    if (s.contains("max_grad_norm")) p.max_grad_norm = s["max_grad_norm"].get<double>();
    if (s.contains("n_envs")) p.n_envs = s["n_envs"].get<int>();
  } catch (const json::exception& e) {
    throw InvalidParams("config: bad value in '" + section + "': " + e.what());
  }
  p.validate();
  return p;
}

PsoConfig pso_config(const json& cfg) {
  PsoConfig p;
  p.swarm_size = get<int>(cfg, "pso", "swarm_size");
  p.iterations = get<int>(cfg, "pso", "iterations");
  p.inertia = get<double>(cfg, "pso", "inertia");
  p.cognitive = get<double>(cfg, "pso", "cognitive");
  p.social = get<double>(cfg, "pso", "social");
  p.velocity_clamp = get<double>(cfg, "pso", "velocity_clamp");
  p.init_spread = get<double>(cfg, "pso", "init_spread");
  p.constraint.enabled = get<bool>(cfg, "pso", "keep_thickness");
  p.constraint.tolerance = get<double>(cfg, "pso", "thickness_tolerance");
  p.n_workers = cfg.value("n_workers", 1);
  p.validate();
  return p;
}

}  // namespace foilrl
