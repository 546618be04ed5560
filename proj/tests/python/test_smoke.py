import math

import pytest

import foilrl


def naca(digits):
    params, residual = foilrl.fit_cst(foilrl.naca4(digits))
    assert residual < 1e-3
    return params


def test_geometry_round_trip():
    p = naca("2412")
    assert len(p) == foilrl.NUM_PARAMS
    x, yu, yl = foilrl.geometry(p, 200)
    assert len(x) == 200 and x[0] == 0.0 and x[-1] == 1.0
    assert all(u >= l for u, l in zip(yu, yl))
    assert abs(foilrl.max_thickness(naca("0012")) - 0.12) < 1e-3


def test_solvers():
    sym = naca("0012")
    for fidelity in ("high", "low"):
        r = foilrl.solve(sym, fidelity=fidelity, aoa=0.0, mach=0.0)
        assert r["converged"]
        assert abs(r["cl"]) < 1e-6
    r = foilrl.solve(naca("2412"), fidelity="high")
    assert r["converged"] and r["cl"] / r["cd"] > 0


def test_errors_map_to_python():
    with pytest.raises(foilrl.InvalidParams):
        foilrl.geometry([0.0] * 5)
    with pytest.raises(foilrl.FoilrlError):
        foilrl.fit_file("/nonexistent/airfoil.dat")
    with pytest.raises(foilrl.InvalidParams):
        foilrl.Env({"env": {"sigmaa": 1}})


def test_env_episode():
    env = foilrl.Env({"env": {"episode_max_length": 5}}, fidelity="low")
    obs = env.reset(seed=3)
    assert len(obs) == 18 and all(-1.0 <= v <= 1.0 for v in obs)
    total = env.episode_return
    done = False
    while not done:
        obs, reward, done, info = env.step([0.1] * 18)
        total += reward
    assert math.isclose(total, env.episode_return, rel_tol=0, abs_tol=1e-9)


def test_train_evaluate_and_pso(tmp_path):
    cfg = {"seed": 4, "env": {"episode_max_length": 6}, "ppo": {"n_steps": 64, "batch_size": 32, "n_epochs": 1}}
    out = tmp_path / "agent.bin"
    ck = foilrl.train(cfg, fidelity="low", timesteps=128, checkpoint_out=str(out))
    assert ck.timesteps == 128 and out.exists()
    again = foilrl.Checkpoint.load(str(out))
    obs = [0.0] * 18
    assert again.act(obs) == ck.act(obs)
    assert again.export_weights()["format"] == "foilrl-weights"

    records, summary = foilrl.evaluate(ck, fidelity="low", config=cfg)
    assert len(records) >= 50
    assert summary["n_evaluated"] + summary["n_excluded"] == len(records)
    assert all(r["improvement"] >= 0 for r in records if r["initial_converged"])

    res = foilrl.pso(naca("2412"), fidelity="low", config={"pso": {"iterations": 5, "swarm_size": 4}})
    assert res["fitness_calls"] == 4 * 6
    assert all(b >= a for a, b in zip(res["trace"], res["trace"][1:]))


def test_time_reduction():
    assert abs(foilrl.time_reduction(81920 * 0.073, 26312 * 0.004 + 10240 * 0.073) - 85.74) < 0.01
