#pragma once

// Run configuration tree shared by the command-line tools: one JSON document
// with a section per module. Files are merged over the defaults and flags are
// applied on top; the resolved tree is written next to every run's outputs.

#include <string>

#include <json.hpp>

#include "foilrl/env.hpp"
#include "foilrl/ppo.hpp"
#include "foilrl/pso.hpp"

namespace foilrl {

inline constexpr int kRunConfigVersion = 1;

nlohmann::json default_run_config();

// Deep merge of `patch` into `base`. Keys absent from `base` are rejected with
// InvalidParams (typo guard), except inside the ppo section, whose preset
// overrides are optional.
void merge_run_config(nlohmann::json& base, const nlohmann::json& patch);

// Reads a config file and merges it over the defaults.
nlohmann::json load_run_config(const std::string& path);

// Directory holding the bundled airfoils: $FOILRL_DATA_DIR, else the
// source tree's data directory.
std::string data_dir();
// Default parent of run directories: $FOILRL_OUTPUT_ROOT, else "runs".
std::string output_root();
// Relative paths resolve against data_dir().
std::string resolve_data_path(const std::string& p);

SolverConfig solver_config(const nlohmann::json& cfg, Fidelity fidelity);
FlowConditions flow_conditions(const nlohmann::json& cfg);
// Environment section plus solver and flow; the reset pool is left empty.
EnvConfig env_config(const nlohmann::json& cfg, Fidelity fidelity);
std::vector<std::string> reset_names(const nlohmann::json& cfg);
// Preset named in `section`.preset, then any PpoConfig field given there.
PpoConfig ppo_config(const nlohmann::json& cfg, const std::string& section = "ppo");
PsoConfig pso_config(const nlohmann::json& cfg);

}  // namespace foilrl
