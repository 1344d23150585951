"""Circumvent (bump) functions that push one funnel boundary past an obstacle.

A bump on the lower boundary of coordinate i reads

    beta(t) = X_lo_i + B exp(-k (t - m)^2 / (r^2 - (t - m)^2))   for |t - m| < r
    beta(t) = X_lo_i                                            otherwise

and the upper-boundary version mirrors it down from X_hi_i.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (DimensionError, GeometricInfeasibilityError, InfeasibleDimensionError,
                     ParameterError)
from .geometry import (Environment, Interval, constrained_axes, intersection_window, project,
                       projection_entry_time)

# Relative half-width of the band at the window edge where the exponent is
# clamped to -inf instead of evaluated.
EDGE_GUARD = 1e-9


class Side(str, enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class CircumventFn:
    dim: int
    side: Side
    B: float
    m: float
    r: float
    k: float
    base: float
    window: tuple
    delta_t: float
    obstacle: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "side", Side(self.side))
        if not self.r > 0:
            raise ParameterError(f"bump half-width must be positive, got {self.r}")
        if not self.B > 0:
            raise ParameterError(f"bump amplitude must be positive, got {self.B}")
        if not self.k > 0:
            raise ParameterError(f"bump smoothness k must be positive, got {self.k}")

    @property
    def t_act(self) -> tuple:
        return (self.m - self.r, self.m + self.r)

    @property
    def peak(self) -> float:
        return self.base + self.B if self.side is Side.LOWER else self.base - self.B


def eval_beta(cf: CircumventFn, t: float):
    """Bump value and its time derivative at ``t``."""
    s = t - cf.m
    gap = cf.r * cf.r - s * s
    if abs(s) >= cf.r * (1.0 - EDGE_GUARD) or gap <= 0.0:
        return cf.base, 0.0
    expo = -cf.k * s * s / gap
    b = cf.B * math.exp(expo)
    db = b * (-2.0 * cf.k * s * cf.r * cf.r / (gap * gap))
    if cf.side is Side.LOWER:
        return cf.base + b, db
    return cf.base - b, -db


def transition_mesh(cf: CircumventFn, ratio: float = 0.8, outer: float = 50.0,
                    inner: float = 0.01) -> np.ndarray:
    """Time points graded toward both edges of the activity window.

    With small k the bump rises from ~0 to ~B within a few k*r of each edge;
    the distances to the edge run geometrically from ``outer*k*r`` down to
    ``inner*k*r`` so a fixed-step integrator can resolve that rise.
    """
    kr = cf.k * cf.r
    q_hi = min(outer * kr, cf.r)
    q_lo = min(inner * kr, q_hi)
    qs = [q_hi]
    while qs[-1] * ratio > q_lo:
        qs.append(qs[-1] * ratio)
    qs = np.array(qs + [0.0])
    lo, hi = cf.t_act
    return np.unique(np.concatenate([lo + qs, hi - qs]))


class SelectionRng:
    """Seeded source for the random dimension and side choices."""

    def __init__(self, seed: int = 0):
        if seed < 0:
            raise ParameterError("seed must be a non-negative integer")
        self.seed = int(seed)
        self.counter = 0
        self._gen = np.random.default_rng(self.seed)

    def choice(self, options):
        options = list(options)
        self.counter += 1
        if len(options) == 1:
            return options[0]
        return options[int(self._gen.integers(len(options)))]


def first_obstacle(traj, obstacles):
    """Obstacle entered earliest along ``traj`` as ``(index, (t_lo, t_hi))``.

    Returns ``None`` when the trajectory touches no obstacle. Ties in entry
    time go to the lowest index.
    """
    best = None
    for j, obs in enumerate(obstacles):
        w = intersection_window(traj, obs)
        if w is not None and (best is None or w[0] < best[1][0]):
            best = (j, w)
    return best


def _sample_step(traj) -> float:
    t = np.asarray(traj.t if hasattr(traj, "t") else traj[0])
    return float(t[1] - t[0]) if len(t) > 1 else 0.0


def dimension_entry_times(traj, obstacle, n: int) -> dict:
    return {i: projection_entry_time(traj, project(obstacle, i), i)
            for i in constrained_axes(obstacle, n)}


def select_dimension(traj, obstacle, rng: SelectionRng, n: int | None = None) -> int:
    """Coordinate whose obstacle projection the trajectory enters first.

    Coordinates whose entry time is within one sample step of the earliest
    are treated as tied and one of them is drawn from ``rng``.
    """
    if n is None:
        n = np.asarray(traj.x if hasattr(traj, "x") else traj[1]).shape[1]
    times = dimension_entry_times(traj, obstacle, n)
    t_min = min(times.values())
    if math.isinf(t_min):
        raise GeometricInfeasibilityError("trajectory never enters the obstacle's projections")
    h = _sample_step(traj)
    tied = sorted(i for i, ti in times.items() if ti - t_min <= h * (1.0 + 1e-9))
    return rng.choice(tied) if len(tied) > 1 else tied[0]


def select_side(obstacle_proj: Interval, space_proj: Interval, rng: SelectionRng) -> Side:
    """Which funnel boundary carries the bump.

    An obstacle flush with the lower state bound can only be passed above it
    (bump on the lower boundary) and vice versa; otherwise pick at random.
    """
    tol = 1e-12 * space_proj.width
    at_lo = obstacle_proj.lo <= space_proj.lo + tol
    at_hi = obstacle_proj.hi >= space_proj.hi - tol
    if at_lo and at_hi:
        raise InfeasibleDimensionError(
            f"obstacle projection [{obstacle_proj.lo:g}, {obstacle_proj.hi:g}] spans the whole "
            f"state-space projection [{space_proj.lo:g}, {space_proj.hi:g}]; no side can pass it")
    if at_lo:
        return Side.LOWER
    if at_hi:
        return Side.UPPER
    return rng.choice([Side.LOWER, Side.UPPER])


def make_circumvent(env: Environment, obstacle, dim: int, side, window, delta_t: float,
                    delta_B: float, k: float, obstacle_index: int | None = None) -> CircumventFn:
    if not 0 <= dim < env.n:
        raise DimensionError(f"dimension {dim} out of range for a {env.n}-dim state")
    if not delta_t > 0:
        raise ParameterError(f"delta_t must be positive, got {delta_t}")
    if not k > 0:
        raise ParameterError(f"k must be positive, got {k}")
    if not delta_B >= 0:
        raise ParameterError(f"delta_B must be non-negative, got {delta_B}")
    t_lo, t_hi = float(window[0]), float(window[1])
    if t_hi < t_lo:
        raise ParameterError(f"window ({t_lo}, {t_hi}) is reversed")
    side = Side(side)
    X = env.state_space.dims[dim]
    U = project(obstacle, dim)
    if side is Side.LOWER:
        B = U.hi - X.lo + delta_B
        base = X.lo
        if base + B >= X.hi:
            raise GeometricInfeasibilityError(
                f"lower bump on dim {dim} would peak at {base + B:g}, at or above the state "
                f"bound {X.hi:g} (obstacle top {U.hi:g}, delta_B {delta_B:g})")
    else:
        B = X.hi - U.lo + delta_B
        base = X.hi
        if base - B <= X.lo:
            raise GeometricInfeasibilityError(
                f"upper bump on dim {dim} would dip to {base - B:g}, at or below the state "
                f"bound {X.lo:g} (obstacle bottom {U.lo:g}, delta_B {delta_B:g})")
    return CircumventFn(dim=dim, side=side, B=B, m=0.5 * (t_lo + t_hi),
                        r=0.5 * (t_hi - t_lo) + delta_t, k=k, base=base,
                        window=(t_lo, t_hi), delta_t=delta_t, obstacle=obstacle_index)


def widen(cf: CircumventFn, window, B: float | None = None) -> CircumventFn:
    """Same bump stretched over the union of its window and ``window``."""
    t_lo = min(cf.window[0], float(window[0]))
    t_hi = max(cf.window[1], float(window[1]))
    return replace(cf, B=max(cf.B, B if B is not None else cf.B), m=0.5 * (t_lo + t_hi),
                   r=0.5 * (t_hi - t_lo) + cf.delta_t, window=(t_lo, t_hi))
