#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "foilrl/aero.hpp"
#include "foilrl/checkpoint.hpp"
#include "foilrl/env.hpp"
#include "foilrl/errors.hpp"
#include "foilrl/eval.hpp"
#include "foilrl/geometry.hpp"
#include "foilrl/ppo.hpp"
#include "foilrl/pso.hpp"
#include "foilrl/run_config.hpp"
#include "foilrl/transfer.hpp"

namespace py = pybind11;
using namespace foilrl;

namespace {

CstParams to_params(const std::vector<double>& v) {
  if (v.size() != kNumParams) throw InvalidParams("expected 18 CST parameters, got " + std::to_string(v.size()));
  CstParams p;
  std::copy(v.begin(), v.end(), p.values().begin());
  return p;
}

std::vector<double> from_params(const CstParams& p) { return {p.values().begin(), p.values().end()}; }

// Python dicts cross the boundary as JSON text; this keeps the config
// handling in one place.
nlohmann::json config_from(const py::object& cfg) {
  nlohmann::json base = default_run_config();
  if (!cfg.is_none()) {
    const std::string text = py::module_::import("json").attr("dumps")(cfg).cast<std::string>();
    merge_run_config(base, nlohmann::json::parse(text));
  }
  return base;
}

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict result_dict(const AeroResult& r) {
  py::dict d;
  d["converged"] = r.converged;
  d["cl"] = r.cl;
  d["cd"] = r.cd;
  d["confidence"] = r.confidence;
  d["failure"] = r.failure;
  return d;
}

py::dict record_dict(const EvalRecord& r) {
  py::dict d;
  d["name"] = r.name;
  d["initial"] = r.initial;
  d["best"] = r.best;
  d["improvement"] = r.improvement;
  d["mt_initial"] = r.mt_initial;
  d["mt_at_best"] = r.mt_at_best;
  d["delta_mt_percent"] = r.delta_mt_percent;
  d["length"] = r.length;
  d["reason"] = r.reason;
  d["best_step"] = r.best_step;
  d["initial_converged"] = r.initial_converged;
  d["inference_seconds"] = r.inference_seconds;
  return d;
}

FlowConditions flow_of(double aoa, double reynolds, double mach) {
  FlowConditions f;
  f.angle_of_attack_deg = aoa;
  f.reynolds = reynolds;
  f.mach = mach;
  return f;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Airfoil shape optimization with PPO, transfer learning and a PSO baseline";

  static py::exception<Error> base_error(m, "FoilrlError", PyExc_RuntimeError);
  static py::exception<InvalidParams> invalid_params(m, "InvalidParams", base_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidParams& e) {
      invalid_params(e.what());
    } catch (const Error& e) {
      base_error(e.what());
    }
  });

  m.attr("NUM_PARAMS") = kNumParams;

  m.def("default_config", [] { return to_py(default_run_config()); }, "Default run configuration");

  m.def(
      "naca4",
      [](const std::string& digits, std::size_t n) {
        std::vector<std::pair<double, double>> out;
        for (const auto& p : naca4_coordinates(digits, n)) out.emplace_back(p.x, p.y);
        return out;
      },
      py::arg("digits"), py::arg("n_per_side") = 121, "NACA 4-digit coordinates, Selig order");

  m.def(
      "fit_cst",
      [](const std::vector<std::pair<double, double>>& pts) {
        std::vector<Point2> coords;
        for (const auto& [x, y] : pts) coords.push_back({x, y});
        const CstFit fit = fit_cst(coords, ParamBounds::defaults());
        return py::make_tuple(from_params(fit.params), fit.residual);
      },
      py::arg("points"), "Fit CST parameters to a Selig-ordered loop; returns (params, residual)");

  m.def(
      "fit_file",
      [](const std::string& path) {
        const CstFit fit = fit_cst(read_airfoil_file(path).points, ParamBounds::defaults());
        return py::make_tuple(from_params(fit.params), fit.residual);
      },
      py::arg("path"));

  m.def(
      "geometry",
      [](const std::vector<double>& params, std::size_t n) {
        const AirfoilGeometry g = cst_to_geometry(to_params(params), n);
        return py::make_tuple(g.x, g.y_upper, g.y_lower);
      },
      py::arg("params"), py::arg("n_stations") = 200, "Returns (x, y_upper, y_lower)");

  m.def(
      "max_thickness", [](const std::vector<double>& params) { return max_thickness(cst_to_geometry(to_params(params))); },
      py::arg("params"));

  m.def(
      "solve",
      [](const std::vector<double>& params, const std::string& fidelity, double aoa, double reynolds, double mach) {
        const Fidelity f = fidelity_from_string(fidelity);
        const SolverConfig cfg = f == Fidelity::high ? SolverConfig::high_fidelity() : SolverConfig::low_fidelity();
        return result_dict(solve(cst_to_geometry(to_params(params)), flow_of(aoa, reynolds, mach), cfg));
      },
      py::arg("params"), py::arg("fidelity") = "high", py::arg("aoa") = 2.0, py::arg("reynolds") = 1e6,
      py::arg("mach") = 0.5);

  m.def("time_reduction", &time_reduction, py::arg("tl_free_cost"), py::arg("tl_cost"));

  py::class_<AirfoilEnv>(m, "Env")
      .def(py::init([](const py::object& cfg, const std::string& fidelity) {
             const nlohmann::json c = config_from(cfg);
             EnvConfig env = env_config(c, fidelity_from_string(fidelity));
             env.reset_pool = load_reset_pool(resolve_data_path(c["env"]["reset_dir"].get<std::string>()),
                                              reset_names(c), "");
             return AirfoilEnv(env);
           }),
           py::arg("config") = py::none(), py::arg("fidelity") = "low")
      .def(
          "reset",
          [](AirfoilEnv& env, std::uint64_t seed) {
            Rng rng(seed);
            env.reset(rng);
            return env.observe();
          },
          py::arg("seed") = 0, "Random pool airfoil; returns the normalized observation")
      .def(
          "reset_to",
          [](AirfoilEnv& env, const std::vector<double>& params) { return env.reset_to(to_params(params)); },
          py::arg("params"))
      .def(
          "step",
          [](AirfoilEnv& env, const Action& a) {
            const StepOutcome out = env.step(a);
            py::dict info;
            info["cl"] = out.info.cl;
            info["cd"] = out.info.cd;
            info["ratio"] = out.info.ratio;
            info["mt"] = out.info.mt;
            info["converged"] = out.info.converged;
            info["reason"] = to_string(out.reason);
            return py::make_tuple(env.observe(), out.reward, out.terminated, info);
          },
          py::arg("action"), "Returns (observation, reward, terminated, info)")
      .def_property_readonly("params", [](const AirfoilEnv& env) { return from_params(env.state().params); })
      .def_property_readonly("episode_return", [](const AirfoilEnv& env) { return env.state().episode_return; })
      .def_property_readonly("solver_calls", &AirfoilEnv::solver_calls);

  py::class_<AgentCheckpoint>(m, "Checkpoint")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save", [](const AgentCheckpoint& ck, const std::string& path) { save_checkpoint(ck, path); })
      .def_readonly("timesteps", &AgentCheckpoint::timesteps)
      .def_property_readonly("meta", [](const AgentCheckpoint& ck) { return to_py(ck.meta); })
      .def(
          "act",
          [](const AgentCheckpoint& ck, const std::vector<double>& obs) {
            Vector x = Eigen::Map<const Vector>(obs.data(), static_cast<Eigen::Index>(obs.size()));
            const Vector a = ck.agent.act_mean(x);
            return std::vector<double>(a.data(), a.data() + a.size());
          },
          py::arg("observation"), "Mean action for a normalized observation")
      .def("export_weights", [](const AgentCheckpoint& ck) { return to_py(export_weights(ck)); });

  m.def(
      "train",
      [](const py::object& cfg, const std::string& fidelity, std::int64_t timesteps, const std::string& out) {
        const nlohmann::json c = config_from(cfg);
        EnvConfig env = env_config(c, fidelity_from_string(fidelity));
        env.reset_pool =
            load_reset_pool(resolve_data_path(c["env"]["reset_dir"].get<std::string>()), reset_names(c), "");
        PpoConfig p = ppo_config(c);
        if (timesteps >= 0) p.total_timesteps = timesteps;
        TrainOptions opts;
        opts.checkpoint_out = out;
        opts.n_workers = c["n_workers"].get<int>();
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(env, p, c["seed"].get<std::uint64_t>(), opts);
        }
        return r.checkpoint;
      },
      py::arg("config") = py::none(), py::arg("fidelity") = "low", py::arg("timesteps") = -1,
      py::arg("checkpoint_out") = "", "Train from scratch; returns the final checkpoint");

  m.def(
      "evaluate",
      [](const AgentCheckpoint& ck, const std::string& dataset, const std::string& fidelity, const py::object& cfg) {
        const nlohmann::json c = config_from(cfg);
        const EnvConfig env = env_config(c, fidelity_from_string(fidelity));
        std::vector<EvalRecord> recs;
        {
          py::gil_scoped_release release;
          const Dataset ds = load_dataset(resolve_data_path(dataset));
          recs = evaluate_policy(ck.agent, ds.entries, env, true, c["seed"].get<std::uint64_t>());
        }
        py::list out;
        for (const auto& r : recs) out.append(record_dict(r));
        return py::make_tuple(out, to_py(to_json(summarize(recs))));
      },
      py::arg("checkpoint"), py::arg("dataset") = "airfoils/uiuc", py::arg("fidelity") = "high",
      py::arg("config") = py::none(), "Returns (records, summary)");

  m.def(
      "pso",
      [](const std::vector<double>& seed_params, const std::string& fidelity, const py::object& cfg) {
        const nlohmann::json c = config_from(cfg);
        const AeroSolver solver = make_solver(solver_config(c, fidelity_from_string(fidelity)), flow_conditions(c));
        Rng rng(derive_seed(c["seed"].get<std::uint64_t>(), 1000));
        PsoResult r;
        {
          py::gil_scoped_release release;
          r = pso_optimize_airfoil(to_params(seed_params), solver, pso_config(c), ParamBounds::defaults(), rng);
        }
        py::dict d;
        d["best"] = from_params(r.best);
        d["best_fitness"] = r.best_fitness;
        d["trace"] = r.trace;
        d["fitness_calls"] = r.fitness_calls;
        return d;
      },
      py::arg("seed_params"), py::arg("fidelity") = "low", py::arg("config") = py::none());
}
