#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "foilrl/errors.hpp"
#include "foilrl/run_config.hpp"

using namespace foilrl;
using nlohmann::json;

TEST_CASE("defaults resolve to library defaults") {
  const json cfg = default_run_config();
  CHECK(cfg["version"] == kRunConfigVersion);
  const PpoConfig p = ppo_config(cfg);
  CHECK(p.n_steps == PpoConfig::from_scratch().n_steps);
  CHECK(p.gamma == PpoConfig::from_scratch().gamma);
  const PpoConfig f = ppo_config(cfg, "finetune");
  CHECK(f.n_steps == PpoConfig::finetune().n_steps);
  const PsoConfig s = pso_config(cfg);
  CHECK(s.swarm_size == 30);
  CHECK(s.iterations == 700);
  CHECK_FALSE(s.constraint.enabled);
  const EnvConfig e = env_config(cfg, Fidelity::low);
  CHECK(e.solver.fidelity == Fidelity::low);
  CHECK(e.episode_max_length == 100);
  CHECK(e.sigma == 0.0);
  CHECK(e.reset_pool.empty());
  CHECK(flow_conditions(cfg).reynolds == 1e6);
}

TEST_CASE("merging overrides and typo guard") {
  json cfg = default_run_config();
  merge_run_config(cfg, {{"env", {{"sigma", 15.0}}}, {"ppo", {{"learning_rate", 1e-3}, {"preset", "pretrain"}}}});
  CHECK(cfg["env"]["sigma"] == 15.0);
  CHECK(cfg["env"]["episode_max_length"] == 100);
  const PpoConfig p = ppo_config(cfg);
  CHECK(p.learning_rate == 1e-3);
  CHECK(p.clip_range == PpoConfig::pretrain().clip_range);
  CHECK(env_config(cfg, Fidelity::high).sigma == 15.0);

  json again = default_run_config();
  CHECK_THROWS_AS(merge_run_config(again, {{"env", {{"sigmaa", 1.0}}}}), InvalidParams);
  CHECK_THROWS_AS(merge_run_config(again, {{"unknown", 1}}), InvalidParams);
  CHECK_THROWS_AS(merge_run_config(again, {{"ppo", {{"learnin_rate", 1.0}}}}), InvalidParams);

  json bad = default_run_config();
  bad["ppo"]["gamma"] = "high";
  CHECK_THROWS_AS(ppo_config(bad), InvalidParams);
}

TEST_CASE("config files") {
  const auto path = (std::filesystem::temp_directory_path() / "foilrl_cfg_test.json").string();
  std::ofstream(path) << R"({"seed": 9, "pso": {"keep_thickness": true}})";
  const json cfg = load_run_config(path);
  CHECK(cfg["seed"] == 9);
  CHECK(pso_config(cfg).constraint.enabled);
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_run_config(path), InvalidParams);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_run_config(path), IoError);
}

TEST_CASE("data paths") {
  CHECK(resolve_data_path("/abs/path") == "/abs/path");
  const std::string p = resolve_data_path("airfoils/reset");
  CHECK(std::filesystem::is_directory(p));
  CHECK(reset_names(default_run_config()).size() == 20);
}
