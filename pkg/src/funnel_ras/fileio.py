"""Run-spec loading and the on-disk formats for trajectories, reports and plots.

Run specs are JSON documents validated against ``RUNSPEC_SCHEMA`` before any
numerics run. Trajectories are CSV with 17 significant digits so every
float64 survives a write/read cycle unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .adaptive import AdaptiveParams, ModifiedFunnel
from .circumvent import CircumventFn, Side
from .controller import ControllerGain
from .errors import FunnelRASError, SpecError
from .geometry import Ball, Environment, HyperRectangle, Rect
from .plants import Plant, get_plant
from .reach import ReachFunnel, make_reach_funnel
from .simulator import RunReport, SimConfig, Trajectory
from .synthesis import SynthesisParams

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vec = {"type": "array", "items": _num, "minItems": 1}
_bounds = {"type": "array", "minItems": 1,
           "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}}
_axes = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}
_scalar_or_vec = {"oneOf": [_num, _vec]}

RUNSPEC_SCHEMA = {
    "type": "object",
    "required": ["state_space", "target", "plant", "initial_states"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "state_space": _bounds,
        "target": _bounds,
        "obstacles": {
            "type": "array",
            "items": {"oneOf": [
                {"type": "object", "additionalProperties": False,
                 "required": ["type", "bounds"],
                 "properties": {"type": {"const": "rect"}, "bounds": _bounds, "axes": _axes}},
                {"type": "object", "additionalProperties": False,
                 "required": ["type", "center", "radius"],
                 "properties": {"type": {"const": "ball"}, "center": _vec, "radius": _pos,
                                "axes": _axes}},
            ]},
        },
        "plant": {"type": "string"},
        "eta": _vec,
        "funnel": {"type": "object", "additionalProperties": False,
                   "properties": {"l": _scalar_or_vec, "rho_inf": _scalar_or_vec}},
        "circumvent": {"type": "object", "additionalProperties": False,
                       "properties": {"delta_t": _pos,
                                      "delta_B": {"type": "number", "minimum": 0},
                                      "k": _pos}},
        "adaptive": {"type": "object", "additionalProperties": False,
                     "properties": {"mu": _pos, "kappa": _pos, "theta0": _pos,
                                    "nu": _pos, "s": _pos}},
        "gain": {"type": "object", "additionalProperties": False,
                 "properties": {"k": _pos, "xi_mode": {"enum": ["elementwise", "scalar"]}}},
        "sim": {"type": "object", "additionalProperties": False,
                "properties": {"h": _pos, "horizon": {"type": "number", "minimum": 0},
                               "record_every": {"type": "integer", "minimum": 1}}},
        "synthesis": {"type": "object", "additionalProperties": False,
                      "properties": {"max_iterations": {"type": "integer", "minimum": 1},
                                     "seed": {"type": "integer", "minimum": 0}}},
        "initial_states": {"type": "array", "items": _vec, "minItems": 1},
    },
}


@dataclass
class RunSpec:
    env: Environment
    plant: Plant
    params: SynthesisParams
    initial_states: list
    raw: dict = field(default_factory=dict)
    name: str = ""

    def with_overrides(self, seed=None, h=None, horizon=None) -> "RunSpec":
        raw = json.loads(json.dumps(self.raw))
        if seed is not None:
            raw.setdefault("synthesis", {})["seed"] = int(seed)
        if h is not None:
            raw.setdefault("sim", {})["h"] = float(h)
        if horizon is not None:
            raw.setdefault("sim", {})["horizon"] = float(horizon)
        return parse_runspec(raw, self.name)


def _field_path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def _obstacle(d: dict):
    axes = tuple(d["axes"]) if "axes" in d else None
    if d["type"] == "rect":
        return Rect(HyperRectangle.from_bounds(d["bounds"]), axes=axes)
    return Ball(tuple(d["center"]), float(d["radius"]), axes=axes)


def parse_runspec(raw: dict, source: str = "<spec>") -> RunSpec:
    """Validate a decoded run spec and build the objects it describes."""
    validator = jsonschema.Draft202012Validator(RUNSPEC_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SpecError(f"{source}: field {_field_path(err)!r}: {err.message}")
    try:
        X = HyperRectangle.from_bounds(raw["state_space"])
        T = HyperRectangle.from_bounds(raw["target"])
        env = Environment(X, T, [_obstacle(o) for o in raw.get("obstacles", [])])
    except FunnelRASError as err:
        raise SpecError(f"{source}: environment invalid: {err}") from err
    try:
        plant = get_plant(raw["plant"])
    except KeyError as err:
        raise SpecError(f"{source}: field 'plant': {err.args[0]}") from None
    if plant.n != env.n:
        raise SpecError(f"{source}: plant {plant.label} has {plant.n} states, "
                        f"state_space has {env.n} dimensions")
    states = [np.asarray(s, dtype=float) for s in raw["initial_states"]]
    for idx, s in enumerate(states):
        if s.shape != (env.n,):
            raise SpecError(f"{source}: field 'initial_states/{idx}' must have {env.n} entries")
    for key in ("l", "rho_inf"):
        v = raw.get("funnel", {}).get(key)
        if isinstance(v, list) and len(v) != env.n:
            raise SpecError(f"{source}: field 'funnel/{key}' must have {env.n} entries")
    if "eta" in raw and len(raw["eta"]) != env.n:
        raise SpecError(f"{source}: field 'eta' must have {env.n} entries")

    fn, cv = raw.get("funnel", {}), raw.get("circumvent", {})
    gain, sim, syn = raw.get("gain", {}), raw.get("sim", {}), raw.get("synthesis", {})
    try:
        params = SynthesisParams(
            delta_t=cv.get("delta_t", 0.1), delta_B=cv.get("delta_B", 0.0),
            k_bump=cv.get("k", 0.001),
            adaptive=AdaptiveParams(**raw.get("adaptive", {})),
            gain=ControllerGain(gain.get("k", 1.0)),
            max_iterations=syn.get("max_iterations", 25), seed=syn.get("seed", 0),
            l=fn.get("l", 0.7), rho_inf=fn.get("rho_inf", 0.05), eta=raw.get("eta"),
            sim=SimConfig(h=sim.get("h", 0.005), horizon=sim.get("horizon", 30.0),
                          record_every=sim.get("record_every", 1)),
            xi_mode=gain.get("xi_mode", "elementwise"))
        # Funnel construction checks eta and the admissible rho_inf range.
        make_reach_funnel(env, params.eta, params.l, params.rho_inf)
    except FunnelRASError as err:
        raise SpecError(f"{source}: {err}") from err
    return RunSpec(env, plant, params, states, raw, raw.get("name", Path(source).stem))


def load_runspec(path) -> RunSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise SpecError(f"cannot read run spec {path}: {err.strerror}") from err
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecError(f"{path}: line {err.lineno} column {err.colno}: {err.msg}") from err
    return parse_runspec(raw, str(path))


def preset_path(name: str = "omni_arena") -> Path:
    """Path of a run spec shipped with the package."""
    return Path(str(resources.files("funnel_ras") / "presets" / f"{name}.json"))


# -- trajectories ---------------------------------------------------------

def trajectory_header(n: int, m: int) -> list:
    cols = ["t"]
    cols += [f"x_{i}" for i in range(1, n + 1)]
    cols += [f"u_{i}" for i in range(1, m + 1)]
    cols += [f"gammaL_{i}" for i in range(1, n + 1)]
    cols += [f"gammaU_{i}" for i in range(1, n + 1)]
    cols += [f"alpha_{i}" for i in range(1, n + 1)]
    return cols


def write_trajectory(path, traj: Trajectory) -> None:
    n, m = traj.n, traj.m
    data = np.column_stack([traj.t, traj.x, traj.u, traj.gamma_L, traj.gamma_U, traj.alpha])
    assert data.shape[1] == 1 + n + m + 3 * n
    np.savetxt(path, data, fmt="%.17g", delimiter=",",
               header=",".join(trajectory_header(n, m)), comments="")


def read_trajectory(path) -> Trajectory:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    n = sum(1 for c in header if c.startswith("x_"))
    m = sum(1 for c in header if c.startswith("u_"))
    if n == 0 or header != trajectory_header(n, m):
        raise SpecError(f"{path}: unexpected trajectory header {header}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise SpecError(f"{path}: rows have {data.shape[1]} columns, header {len(header)}")
    cut = np.cumsum([1, n, m, n, n])
    t, x, u, gl, gu, al = np.split(data, cut, axis=1)
    return Trajectory(t=t[:, 0], x=x, u=u, gamma_L=gl, gamma_U=gu, alpha=al)


# -- funnels --------------------------------------------------------------

def funnel_to_dict(mf: ModifiedFunnel) -> dict:
    r = mf.reach
    return {
        "reach": {k: getattr(r, k).tolist() for k in ("eta", "rho_inf", "l", "c_lo", "c_hi")},
        "adaptive": {k: getattr(mf.params, k) for k in ("mu", "kappa", "theta0", "nu", "s")},
        "circumvents": [
            {"dim": cf.dim, "side": cf.side.value, "B": cf.B, "m": cf.m, "r": cf.r, "k": cf.k,
             "base": cf.base, "window": list(cf.window), "delta_t": cf.delta_t,
             "obstacle": cf.obstacle}
            for cf in mf.circumvents],
    }


def funnel_from_dict(d: dict) -> ModifiedFunnel:
    reach = ReachFunnel(**{k: np.asarray(v, dtype=float) for k, v in d["reach"].items()})
    cfs = [CircumventFn(dim=c["dim"], side=Side(c["side"]), B=c["B"], m=c["m"], r=c["r"],
                        k=c["k"], base=c["base"], window=tuple(c["window"]),
                        delta_t=c["delta_t"], obstacle=c.get("obstacle"))
           for c in d.get("circumvents", [])]
    return ModifiedFunnel(reach, cfs, AdaptiveParams(**d["adaptive"]))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_funnel(path, mf: ModifiedFunnel) -> None:
    write_json(path, funnel_to_dict(mf))


def read_funnel(path) -> ModifiedFunnel:
    return funnel_from_dict(read_json(path))


def write_report(path, report: RunReport, **extra) -> None:
    write_json(path, {**report.to_dict(), **extra})


def read_report(path) -> RunReport:
    d = read_json(path)
    keep = RunReport.__dataclass_fields__.keys()
    return RunReport.from_dict({k: v for k, v in d.items() if k in keep})


def write_envelope(path, traj: Trajectory, mf: ModifiedFunnel) -> None:
    """Reach bounds next to the adaptive bounds at every recorded sample."""
    n = traj.n
    rows = []
    for k, t in enumerate(traj.t):
        rL, rU, _, _ = mf.reach.bounds(float(t))
        rows.append(np.concatenate([[t], rL, rU, traj.gamma_L[k], traj.gamma_U[k]]))
    cols = (["t"] + [f"rhoL_{i}" for i in range(1, n + 1)] + [f"rhoU_{i}" for i in range(1, n + 1)]
            + [f"gammaL_{i}" for i in range(1, n + 1)] + [f"gammaU_{i}" for i in range(1, n + 1)])
    np.savetxt(path, np.array(rows), fmt="%.17g", delimiter=",", header=",".join(cols),
               comments="")


# -- plot data ------------------------------------------------------------

def _outline(shape, n_pts: int = 64) -> dict | None:
    if isinstance(shape, Rect):
        if shape.box.n < 2:
            return None
        (x0, x1), (y0, y1) = shape.box.to_bounds()[:2]
        pts = [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
        axes = list(shape.axes or (0, 1))[:2]
        return {"type": "rect", "axes": axes, "outline": pts}
    if len(shape.center) < 2:
        return None
    a = np.linspace(0.0, 2.0 * math.pi, n_pts + 1)
    cx, cy = shape.center[:2]
    pts = np.column_stack([cx + shape.radius * np.cos(a), cy + shape.radius * np.sin(a)])
    return {"type": "ball", "axes": list(shape.axes or (0, 1))[:2], "outline": pts.tolist()}


def plot_data(traj: Trajectory, env: Environment, mf: ModifiedFunnel | None = None,
              max_points: int = 2000) -> dict:
    """Labelled series for time plots of the tubes and a planar view of the run."""
    stride = max(1, math.ceil(len(traj) / max_points))
    idx = np.arange(0, len(traj), stride)
    if idx[-1] != len(traj) - 1:
        idx = np.append(idx, len(traj) - 1)
    t = traj.t[idx]
    series = [{"label": "t", "values": t.tolist()}]
    if mf is not None:
        rb = np.array([mf.reach.bounds(float(s))[:2] for s in t])
    for i in range(traj.n):
        series.append({"label": f"x_{i + 1}", "values": traj.x[idx, i].tolist()})
        series.append({"label": f"gammaL_{i + 1}", "values": traj.gamma_L[idx, i].tolist()})
        series.append({"label": f"gammaU_{i + 1}", "values": traj.gamma_U[idx, i].tolist()})
        if mf is not None:
            series.append({"label": f"rhoL_{i + 1}", "values": rb[:, 0, i].tolist()})
            series.append({"label": f"rhoU_{i + 1}", "values": rb[:, 1, i].tolist()})
    out = {"series": series,
           "state_space": env.state_space.to_bounds(),
           "target": env.target.to_bounds(),
           "obstacles": [o for o in map(_outline, env.obstacles) if o is not None]}
    if mf is not None:
        out["circumvents"] = [{"dim": cf.dim, "side": cf.side.value, "t_act": list(cf.t_act),
                               "peak": cf.peak} for cf in mf.circumvents]
    return out
