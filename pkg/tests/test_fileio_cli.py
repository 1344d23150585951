import copy
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from funnel_ras.cli import main
from funnel_ras.errors import SpecError
from funnel_ras.fileio import (load_runspec, parse_runspec, preset_path, read_funnel,
                               read_json, read_report, read_trajectory, write_funnel,
                               write_report, write_trajectory)
from funnel_ras.simulator import Trajectory
from funnel_ras.synthesis import synthesize

PRESET = json.loads(preset_path().read_text())


def small_spec(**changes):
    raw = copy.deepcopy(PRESET)
    raw["initial_states"] = [[10, 90, -1]]
    raw["sim"] = {"h": 0.005, "horizon": 8}
    raw.update(changes)
    return raw


def dump(tmp_path, raw, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return p


class TestRunSpec:
    def test_preset_parameters(self):
        spec = load_runspec(preset_path())
        p = spec.params
        assert (p.adaptive.mu, p.adaptive.kappa, p.adaptive.theta0) == (10, 0.3, 0.1)
        assert (p.l, p.rho_inf) == (0.7, 0.05)
        assert (p.k_bump, p.delta_B, p.delta_t) == (0.001, 0, 0.1)
        assert len(spec.initial_states) == 3 and spec.plant.label == "omni_robot"
        assert len(spec.env.obstacles) == 3

    def test_defaults(self):
        raw = {k: PRESET[k] for k in ("state_space", "target", "plant", "initial_states")}
        p = parse_runspec(raw).params
        assert (p.adaptive.mu, p.gain.k, p.sim.h, p.sim.horizon, p.max_iterations, p.seed) == \
            (10.0, 1.0, 0.005, 30.0, 25, 0)
        assert p.xi_mode == "elementwise"

    def test_missing_state_space(self):
        raw = small_spec()
        del raw["state_space"]
        with pytest.raises(SpecError, match="state_space"):
            parse_runspec(raw)

    def test_bad_field_is_named(self):
        with pytest.raises(SpecError, match="adaptive/mu"):
            parse_runspec(small_spec(adaptive={"mu": -1}))
        with pytest.raises(SpecError, match="obstacles/0"):
            parse_runspec(small_spec(obstacles=[{"type": "cone"}]))

    def test_target_outside(self):
        with pytest.raises(SpecError, match="target not inside"):
            parse_runspec(small_spec(target=[[90, 110], [66, 74], [-3, 3]]))

    def test_parse_error_has_position(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text('{\n  "plant": "omni_robot",\n  oops\n}')
        with pytest.raises(SpecError, match="line 3"):
            load_runspec(p)

    def test_inadmissible_rho_inf(self):
        with pytest.raises(SpecError, match="rho_inf"):
            parse_runspec(small_spec(funnel={"rho_inf": 0.2}))

    def test_unknown_plant(self):
        with pytest.raises(SpecError, match="plant"):
            parse_runspec(small_spec(plant="bicycle"))

    def test_overrides(self):
        spec = parse_runspec(small_spec()).with_overrides(seed=7, h=0.01, horizon=3)
        assert (spec.params.seed, spec.params.sim.h, spec.params.sim.horizon) == (7, 0.01, 3.0)


floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.integers(1, 6), st.data())
def test_trajectory_round_trip_is_exact(tmp_path_factory, rows, data):
    n, m = 2, 3
    arr = lambda *shape: np.array(data.draw(st.lists(floats, min_size=int(np.prod(shape)),
                                                     max_size=int(np.prod(shape))))).reshape(shape)
    traj = Trajectory(t=arr(rows), x=arr(rows, n), u=arr(rows, m), gamma_L=arr(rows, n),
                      gamma_U=arr(rows, n), alpha=arr(rows, n))
    path = tmp_path_factory.mktemp("traj") / "t.csv"
    write_trajectory(path, traj)
    back = read_trajectory(path)
    for name in ("t", "x", "u", "gamma_L", "gamma_U", "alpha"):
        assert getattr(back, name).tobytes() == getattr(traj, name).tobytes()
    header = path.read_text().splitlines()[0].split(",")
    assert len(header) == 1 + n + m + 3 * n


def test_funnel_and_report_round_trip(tmp_path):
    spec = parse_runspec(small_spec())
    res = synthesize(spec.env, spec.plant, spec.initial_states[0], spec.params)
    write_funnel(tmp_path / "f.json", res.funnel)
    mf = read_funnel(tmp_path / "f.json")
    assert mf.circumvents == res.funnel.circumvents
    assert mf.params == res.funnel.params
    for t in (0.0, 0.7, 3.3):
        a = mf.gamma(np.ones(3), np.zeros(3), t)
        b = res.funnel.gamma(np.ones(3), np.zeros(3), t)
        assert a.lower.tobytes() == b.lower.tobytes() and a.upper.tobytes() == b.upper.tobytes()
    write_report(tmp_path / "r.json", res.report, seed=1)
    assert read_report(tmp_path / "r.json") == res.report


class TestCLI:
    def test_ras_then_check_then_tamper(self, tmp_path):
        spec = dump(tmp_path, small_spec())
        out = tmp_path / "out"
        assert main(["ras", "--spec", str(spec), "--out", str(out)]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["envelope_0.csv", "funnel_0.json", "plot_0.json", "report_0.json",
                         "traj_0.csv"]
        report = read_json(out / "report_0.json")
        assert report["accepted"] and report["choice_log"]
        plot = read_json(out / "plot_0.json")
        labels = {s["label"] for s in plot["series"]}
        assert {"t", "x_1", "gammaL_1", "gammaU_1", "rhoL_1"} <= labels
        assert len(plot["obstacles"]) == 3

        assert main(["check", "--spec", str(spec), "--out", str(out)]) == 0
        traj = read_trajectory(out / "traj_0.csv")
        traj.x[200, :2] = [30.0, 76.0]          # centre of the ball obstacle
        write_trajectory(out / "traj_0.csv", traj)
        assert main(["check", "--spec", str(spec), "--out", str(out)]) == 1
        rep = read_json(out / "check_0.json")
        assert rep["obstacle_violations"] == [[2, float(traj.t[200])]]

    def test_reach_ignores_obstacles(self, tmp_path):
        spec = dump(tmp_path, small_spec(obstacles=[]))
        out = tmp_path / "out"
        assert main(["reach", "--spec", str(spec), "--out", str(out), "--horizon", "10"]) == 0
        rep = read_json(out / "report_0.json")
        assert rep["reached_target_at"] is not None and rep["subcommand"] == "reach"

    def test_parallel_matches_sequential(self, tmp_path):
        raw = small_spec(obstacles=[])
        raw["initial_states"] = [[10, 90, -1], [90, 10, 0]]
        spec = dump(tmp_path, raw)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["reach", "--spec", str(spec), "--out", str(a), "--horizon", "3"]) == 0
        assert main(["reach", "--spec", str(spec), "--out", str(b), "--horizon", "3",
                     "--parallel"]) == 0
        for i in (0, 1):
            assert (a / f"traj_{i}.csv").read_bytes() == (b / f"traj_{i}.csv").read_bytes()

    def test_invalid_spec_exit_code(self, tmp_path):
        raw = small_spec()
        del raw["target"]
        out = tmp_path / "out"
        assert main(["ras", "--spec", str(dump(tmp_path, raw)), "--out", str(out)]) == 2
        rec = read_json(out / "error.json")
        assert rec["error"] == "SpecError" and "target" in rec["message"]

    def test_check_without_trajectories(self, tmp_path):
        assert main(["check", "--spec", str(dump(tmp_path, small_spec())),
                     "--out", str(tmp_path / "empty")]) == 2
