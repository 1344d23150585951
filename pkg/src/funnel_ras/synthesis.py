"""Iterative synthesis: simulate, bump the funnel past the first obstacle hit, repeat."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .adaptive import AdaptiveParams, ModifiedFunnel
from .circumvent import (SelectionRng, Side, first_obstacle, make_circumvent,
                         select_dimension, select_side, widen)
from .controller import ControllerGain, FunnelLoop
from .errors import (DimensionError, FunnelViolationError, GeometricInfeasibilityError,
                     ParameterError, ReplayError, SynthesisError)
from .geometry import Environment, constrained_axes, project
from .plants import Plant
from .reach import make_reach_funnel
from .simulator import RunReport, SimConfig, Trajectory, simulate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthesisParams:
    delta_t: float = 0.1
    delta_B: float = 0.0
    k_bump: float = 0.001
    adaptive: AdaptiveParams = field(default_factory=AdaptiveParams)
    gain: ControllerGain = field(default_factory=ControllerGain)
    max_iterations: int = 25
    seed: int = 0
    l: object = 0.7
    rho_inf: object = 0.05
    eta: object = None
    sim: SimConfig = field(default_factory=SimConfig)
    xi_mode: str = "elementwise"

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ParameterError("max_iterations must be at least 1")
        if self.sim.h > self.delta_t:
            raise ParameterError(f"step h={self.sim.h} must not exceed delta_t={self.delta_t}")


@dataclass(frozen=True)
class Choice:
    obstacle: int
    dim: int
    side: Side
    action: str = "add"
    window: tuple = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["side"] = Side(self.side).value
        d["window"] = list(self.window)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Choice":
        return cls(int(d["obstacle"]), int(d["dim"]), Side(d["side"]),
                   d.get("action", "add"), tuple(d.get("window", ())))


@dataclass
class SynthesisResult:
    funnel: ModifiedFunnel
    trajectory: Trajectory
    report: RunReport
    iterations_used: int
    choice_log: list
    loop: FunnelLoop

    @property
    def circumvents(self) -> tuple:
        return self.funnel.circumvents


def _overlapping(circumvents, j, window):
    for idx, cf in enumerate(circumvents):
        lo, hi = cf.t_act
        if cf.obstacle == j and window[0] <= hi and lo <= window[1]:
            return idx
    return None


def _x0_inside(mf: ModifiedFunnel, x0) -> None:
    gb = mf.gamma(np.zeros(mf.n), np.zeros(mf.n), 0.0, check=False)
    bad = np.flatnonzero(~((gb.lower < x0) & (x0 < gb.upper)))
    if bad.size:
        i = int(bad[0])
        raise FunnelViolationError(
            f"x0[{i}]={x0[i]:g} is outside the modified funnel ({gb.lower[i]:g}, "
            f"{gb.upper[i]:g}) at t=0; a bump active at the start excludes the initial state",
            dims=bad.tolist(), t=0.0)


class _RandomChooser:
    def __init__(self, seed):
        self.rng = SelectionRng(seed)

    def __call__(self, q, traj, env, j, window, existing):
        if existing is not None:
            return None
        obs = env.obstacles[j]
        dim = select_dimension(traj, obs, self.rng, env.n)
        side = select_side(project(obs, dim), env.state_space.dims[dim], self.rng)
        return dim, side

    def finish(self, q):
        pass


class _LogChooser:
    def __init__(self, entries):
        self.entries = [e if isinstance(e, Choice) else Choice.from_dict(e) for e in entries]

    def __call__(self, q, traj, env, j, window, existing):
        if q > len(self.entries):
            raise ReplayError(f"choice log ends after {len(self.entries)} entries but "
                              f"iteration {q} still hits obstacle {j}")
        c = self.entries[q - 1]
        if not 0 <= c.obstacle < len(env.obstacles):
            raise ReplayError(f"entry {q}: obstacle index {c.obstacle} out of range")
        if c.dim not in constrained_axes(env.obstacles[c.obstacle], env.n):
            raise ReplayError(f"entry {q}: dimension {c.dim} is not an axis of obstacle "
                              f"{c.obstacle}")
        if c.obstacle != j:
            raise ReplayError(f"entry {q}: log names obstacle {c.obstacle}, trajectory first "
                              f"hits obstacle {j}")
        if (existing is None) != (c.action == "add"):
            raise ReplayError(f"entry {q}: logged action {c.action!r} does not fit the run")
        return None if existing is not None else (c.dim, c.side)

    def finish(self, q):
        if q != len(self.entries):
            raise ReplayError(f"run finished after {q} choices, log has {len(self.entries)}")


def _run(env: Environment, plant: Plant, x0, params: SynthesisParams, chooser):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (env.n,) or plant.n != env.n:
        raise DimensionError("state dimension of x0, plant and environment must agree")
    if env.in_obstacle(x0):
        raise ParameterError(f"x0={x0.tolist()} lies inside obstacle(s) {env.in_obstacle(x0)}")
    if not all(d.lo <= v <= d.hi for v, d in zip(x0, env.state_space.dims)):
        raise ParameterError(f"x0={x0.tolist()} is outside the state space")
    reach = make_reach_funnel(env, params.eta, params.l, params.rho_inf)
    mf = ModifiedFunnel(reach, (), params.adaptive)
    choices = []

    def run(mf):
        loop = FunnelLoop(plant, mf, params.gain, params.xi_mode)
        traj, rep = simulate(plant, loop, x0, cfg=params.sim, env=env)
        traj.meta["seed"] = params.seed
        return loop, traj, rep

    loop, traj, rep = run(mf)
    q = 0
    while True:
        if rep.funnel_violations:
            raise SynthesisError(
                f"iteration {q}: closed loop left the funnel ({rep.aborted or rep.funnel_violations})",
                choices, traj, rep)
        hit = first_obstacle(traj, env.obstacles)
        if hit is None:
            chooser.finish(q)
            return SynthesisResult(mf, traj, rep, q, choices, loop)
        if q >= params.max_iterations:
            raise SynthesisError(
                f"no obstacle-free trajectory after {q} iterations (last hit: obstacle {hit[0]} "
                f"over t in [{hit[1][0]:g}, {hit[1][1]:g}])", choices, traj, rep)
        q += 1
        j, window = hit
        cfs = list(mf.circumvents)
        existing = _overlapping(cfs, j, window)
        try:
            picked = chooser(q, traj, env, j, window, existing)
            if picked is not None:
                dim, side = picked
                cf = make_circumvent(env, env.obstacles[j], dim, side, window, params.delta_t,
                                     params.delta_B, params.k_bump, obstacle_index=j)
        except GeometricInfeasibilityError as err:
            raise type(err)(f"iteration {q}, obstacle {j}: {err}") from err
        if existing is not None:
            old = cfs[existing]
            cfs[existing] = widen(old, window)
            choice = Choice(j, old.dim, old.side, "widen", tuple(window))
        else:
            cfs.append(cf)
            choice = Choice(j, dim, Side(side), "add", tuple(window))
        choices.append(choice)
        log.debug("iteration %d: %s", q, choice)
        mf = mf.with_circumvents(cfs)
        try:
            _x0_inside(mf, x0)
        except FunnelViolationError as err:
            raise SynthesisError(f"iteration {q}: {err}", choices, traj, rep) from err
        loop, traj, rep = run(mf)


def synthesize(env: Environment, plant: Plant, x0, params: SynthesisParams | None = None
               ) -> SynthesisResult:
    """Bump the funnel around obstacles until the closed loop avoids all of them.

    Raises ``SynthesisError`` when ``max_iterations`` runs out or the closed
    loop leaves the funnel, and ``GeometricInfeasibilityError`` when an
    obstacle cannot be passed on the chosen coordinate.
    """
    params = params or SynthesisParams()
    return _run(env, plant, x0, params, _RandomChooser(params.seed))


def replay(env: Environment, plant: Plant, x0, choice_log, params: SynthesisParams | None = None
           ) -> SynthesisResult:
    """Re-run synthesis taking every dimension/side choice from ``choice_log``."""
    params = params or SynthesisParams()
    return _run(env, plant, x0, params, _LogChooser(choice_log))

