"""Fixed-step RK4 simulation of the closed loop and per-sample verification.

The integrated state is x stacked with the adaptive variable alpha. Steps
have the configured size h, with two deterministic exceptions: a step that
straddles the steep edge of a bump is cut at the points of a graded mesh
(see ``circumvent.transition_mesh``), and a step whose stages leave the
funnel, or that eats more than three quarters of the remaining distance to
the funnel boundary (or to the adaptive-law singularity), is halved and
retried. Runs without bumps never trigger either and are plain RK4.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import (AdaptiveSingularityError, FunnelCollapseError, FunnelViolationError,
                     IntegrationError, ModelError, ParameterError)
from .geometry import Environment, contains_points

_RECOVERABLE = (FunnelViolationError, AdaptiveSingularityError, FunnelCollapseError,
                IntegrationError, ModelError, FloatingPointError)

# A step may shrink the distance to a barrier to no less than this fraction.
_MARGIN_KEEP = 0.25


@dataclass(frozen=True)
class SimConfig:
    h: float = 0.005
    horizon: float = 30.0
    record_every: int = 1
    stop_on_reach: bool = False
    max_refine: int = 22

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ParameterError(f"step size must be positive, got {self.h}")
        if not self.horizon >= 0:
            raise ParameterError(f"horizon must be non-negative, got {self.horizon}")
        if int(self.record_every) < 1:
            raise ParameterError("record_every must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.h))


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    gamma_L: np.ndarray
    gamma_U: np.ndarray
    alpha: np.ndarray
    psi: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def m(self) -> int:
        return self.u.shape[1]


@dataclass
class RunReport:
    reached_target_at: float | None = None
    left_target_at: float | None = None
    obstacle_violations: list = field(default_factory=list)
    funnel_violations: list = field(default_factory=list)
    peak_control_norm: float = 0.0
    peak_alpha: list = field(default_factory=list)
    min_psi_plus_alpha: float = math.inf
    aborted: str | None = None
    notes: list = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not self.obstacle_violations and not self.funnel_violations

    @property
    def clean(self) -> bool:
        """Accepted, and the target was reached."""
        return self.accepted and self.reached_target_at is not None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["accepted"] = self.accepted
        if math.isinf(d["min_psi_plus_alpha"]):
            d["min_psi_plus_alpha"] = None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        d = dict(d)
        d.pop("accepted", None)
        if d.get("min_psi_plus_alpha") is None:
            d["min_psi_plus_alpha"] = math.inf
        d["obstacle_violations"] = [tuple(v) for v in d.get("obstacle_violations", [])]
        d["funnel_violations"] = [tuple(v) for v in d.get("funnel_violations", [])]
        return cls(**d)


def integrate_step(deriv: Callable, y, t: float, h: float) -> np.ndarray:
    """One classical RK4 step of y' = deriv(y, t)."""
    y = np.asarray(y, dtype=float)
    k1 = deriv(y, t)
    k2 = deriv(y + 0.5 * h * k1, t + 0.5 * h)
    k3 = deriv(y + 0.5 * h * k2, t + 0.5 * h)
    k4 = deriv(y + h * k3, t + h)
    for i, k in enumerate((k1, k2, k3, k4), 1):
        if not np.all(np.isfinite(k)):
            raise IntegrationError(f"non-finite RK4 stage k{i} at t={t:.6g}")
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _Stepper:
    """RK4 on the augmented state with mesh cuts and margin-based halving."""

    def __init__(self, loop, n: int, active_dims, max_refine: int):
        self.loop = loop
        self.n = n
        self.active = list(active_dims)
        self.max_refine = max_refine

    def eval(self, y, t):
        ev = self.loop(y[:self.n], y[self.n:], t)
        d = np.concatenate([ev.xdot, ev.alpha_dot])
        if not np.all(np.isfinite(d)) or not np.all(np.isfinite(ev.u)):
            raise IntegrationError(f"non-finite closed-loop derivative at t={t:.6g}")
        return ev, d

    def margins(self, y, ev):
        x = y[:self.n]
        width = ev.upper - ev.lower
        m = np.minimum(x - ev.lower, ev.upper - x) / width
        if self.active:
            a = self.active
            m = np.concatenate([m, ev.psi[a] + y[self.n:][a]])
        return m

    def rk4(self, y, t, dt, ev0, d0):
        _, d2 = self.eval(y + 0.5 * dt * d0, t + 0.5 * dt)
        _, d3 = self.eval(y + 0.5 * dt * d2, t + 0.5 * dt)
        _, d4 = self.eval(y + dt * d3, t + dt)
        y1 = y + (dt / 6.0) * (d0 + 2.0 * d2 + 2.0 * d3 + d4)
        ev1, d1 = self.eval(y1, t + dt)
        if np.any(self.margins(y1, ev1) < _MARGIN_KEEP * self.margins(y, ev0)):
            raise FunnelViolationError("step closes too fast on a barrier")
        return y1, ev1, d1

    def advance(self, y, t0, t1, ev0, d0, depth=0):
        try:
            return self.rk4(y, t0, t1 - t0, ev0, d0)
        except _RECOVERABLE:
            if depth >= self.max_refine:
                raise
        tm = 0.5 * (t0 + t1)
        y, ev, d = self.advance(y, t0, tm, ev0, d0, depth + 1)
        return self.advance(y, tm, t1, ev, d, depth + 1)


def _violation_dims(err, n):
    dims = getattr(err, "dims", None)
    return list(dims) if dims else list(range(n))


def simulate(plant, loop, x0, alpha0=None, cfg: SimConfig | None = None,
             env: Environment | None = None) -> tuple:
    """Integrate the closed loop from ``x0`` and check every recorded sample.

    ``loop`` is a callable ``(x, alpha, t) -> LoopEval`` such as
    ``controller.FunnelLoop``. Returns ``(Trajectory, RunReport)``. A funnel
    violation during the run ends it early; the partial trajectory and a
    report listing the violation are returned instead of raising.
    """
    cfg = cfg or SimConfig()
    n = plant.n
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ParameterError(f"x0 must have shape ({n},)")
    alpha0 = np.zeros(n) if alpha0 is None else np.asarray(alpha0, dtype=float)
    funnel = getattr(loop, "funnel", None)
    active = funnel.active_dims if funnel is not None else ()
    gap = funnel.params.gap if funnel is not None else 0.0
    if funnel is not None:
        for cf in funnel.circumvents:
            if cfg.h > cf.delta_t:
                raise ParameterError(
                    f"step h={cfg.h} exceeds the bump tolerance delta_t={cf.delta_t}")

    stepper = _Stepper(loop, n, active, cfg.max_refine)
    y = np.concatenate([x0, alpha0])
    # Precondition: x0 strictly inside the funnel at t = 0 (raises otherwise).
    ev, d = stepper.eval(y, 0.0)

    mesh = loop.mesh() if hasattr(loop, "mesh") else np.empty(0)
    rec = _Recorder(env, n, active, gap)
    rec.add(0.0, y, ev)

    steps = cfg.n_steps
    every = int(cfg.record_every)
    for k in range(steps):
        t0, t1 = k * cfg.h, (k + 1) * cfg.h
        lo, hi = np.searchsorted(mesh, [t0, t1], side="right")
        cuts = [c for c in mesh[lo:hi] if t0 < c < t1]
        try:
            a = t0
            for b in cuts + [t1]:
                y, ev, d = stepper.advance(y, a, b, ev, d)
                a = b
        except _RECOVERABLE as err:
            rec.abort(t1, _violation_dims(err, n), f"{type(err).__name__}: {err}")
            break
        if (k + 1) % every == 0:
            rec.add(t1, y, ev)
            if cfg.stop_on_reach and rec.report.reached_target_at is not None:
                break

    traj = rec.trajectory()
    traj.meta.update(plant=plant.label, h=cfg.h, horizon=cfg.horizon,
                     record_every=every)
    if funnel is not None and funnel.both_sided_dims:
        rec.report.notes.append(
            f"dimensions {list(funnel.both_sided_dims)} carry bumps on both sides; "
            "alpha widens both bounds there")
    return traj, rec.report


class _Recorder:
    def __init__(self, env, n, active, gap):
        self.env = env
        self.n = n
        self.active = list(active)
        self.gap = gap
        self.rows = []
        self.report = RunReport()
        self._obs_seen = set()
        self._funnel_seen = set()

    def add(self, t, y, ev):
        x, alpha = y[:self.n].copy(), y[self.n:].copy()
        self.rows.append((t, x, ev.u.copy(), ev.lower.copy(), ev.upper.copy(), alpha,
                          ev.psi.copy()))
        r = self.report
        bad = np.flatnonzero(~((ev.lower < x) & (x < ev.upper)))
        for i in bad:
            if int(i) not in self._funnel_seen:
                self._funnel_seen.add(int(i))
                r.funnel_violations.append((int(i), float(t)))
        if self.env is not None:
            for j, o in enumerate(self.env.obstacles):
                if j not in self._obs_seen and contains_points(o, x):
                    self._obs_seen.add(j)
                    r.obstacle_violations.append((j, float(t)))
            inside_T = bool(contains_points(self.env.target, x))
            if inside_T and r.reached_target_at is None:
                r.reached_target_at = float(t)
            elif not inside_T and r.reached_target_at is not None and r.left_target_at is None:
                r.left_target_at = float(t)
        r.peak_control_norm = max(r.peak_control_norm, float(np.linalg.norm(ev.u)))
        if self.active:
            r.min_psi_plus_alpha = min(r.min_psi_plus_alpha,
                                       float(np.min(ev.psi[self.active] + alpha[self.active])))

    def abort(self, t, dims, message):
        r = self.report
        r.aborted = message
        for i in dims:
            if i not in self._funnel_seen:
                self._funnel_seen.add(i)
                r.funnel_violations.append((int(i), float(t)))

    def trajectory(self) -> Trajectory:
        t, x, u, gl, gu, al, ps = (np.array(c) for c in zip(*self.rows))
        self.report.peak_alpha = np.max(np.abs(al), axis=0).tolist()
        return Trajectory(t=t, x=x, u=u, gamma_L=gl, gamma_U=gu, alpha=al, psi=ps)


def check_invariants(traj: Trajectory, env: Environment, mf=None) -> RunReport:
    """Recompute the per-sample checks of a trajectory offline.

    With ``mf`` the funnel bounds and psi are re-derived from the funnel and
    the recorded alpha; without it the recorded bounds are trusted and the
    adaptive gap is not checked.
    """
    n = traj.n
    active = list(mf.active_dims) if mf is not None else []
    r = RunReport()
    seen_f, seen_o = set(), set()
    zero = np.zeros(n)
    for k in range(len(traj)):
        t, x, alpha = float(traj.t[k]), traj.x[k], traj.alpha[k]
        if mf is not None:
            gb = mf.gamma(alpha, zero, t, check=False)
            lower, upper = gb.lower, gb.upper
        else:
            lower, upper = traj.gamma_L[k], traj.gamma_U[k]
        for i in np.flatnonzero(~((lower < x) & (x < upper))):
            if int(i) not in seen_f:
                seen_f.add(int(i))
                r.funnel_violations.append((int(i), t))
        for j, o in enumerate(env.obstacles):
            if j not in seen_o and contains_points(o, x):
                seen_o.add(j)
                r.obstacle_violations.append((j, t))
        inside_T = bool(contains_points(env.target, x))
        if inside_T and r.reached_target_at is None:
            r.reached_target_at = t
        elif not inside_T and r.reached_target_at is not None and r.left_target_at is None:
            r.left_target_at = t
        r.peak_control_norm = max(r.peak_control_norm, float(np.linalg.norm(traj.u[k])))
        if active:
            psi = mf.psi(t)
            r.min_psi_plus_alpha = min(r.min_psi_plus_alpha,
                                       float(np.min(psi[active] + alpha[active])))
    r.peak_alpha = np.max(np.abs(traj.alpha), axis=0).tolist()
    return r
