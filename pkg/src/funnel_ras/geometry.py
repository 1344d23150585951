"""Sets used to describe a reach-avoid-stay problem.

Dimension indices are zero-based throughout the package. Every set is
closed, so boundary points count as members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ConstructionError, DimensionError


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi) or not lo < hi:
            raise ConstructionError(f"degenerate interval [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, v) -> bool:
        return self.lo <= v <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi


UNBOUNDED = Interval(-math.inf, math.inf)


@dataclass(frozen=True)
class HyperRectangle:
    dims: tuple

    def __post_init__(self):
        ivs = tuple(d if isinstance(d, Interval) else Interval(*d) for d in self.dims)
        if not ivs:
            raise ConstructionError("hyper-rectangle needs at least one dimension")
        object.__setattr__(self, "dims", ivs)

    @classmethod
    def from_bounds(cls, bounds: Sequence[Sequence[float]]) -> "HyperRectangle":
        return cls(tuple(Interval(lo, hi) for lo, hi in bounds))

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def lo(self) -> np.ndarray:
        return np.array([d.lo for d in self.dims])

    @property
    def hi(self) -> np.ndarray:
        return np.array([d.hi for d in self.dims])

    @property
    def center(self) -> np.ndarray:
        return np.array([d.mid for d in self.dims])

    def to_bounds(self) -> list:
        return [[d.lo, d.hi] for d in self.dims]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned box obstacle.

    ``axes`` lists the state coordinates the box constrains; coordinates not
    listed are left free, so a planar box becomes a prism in a state that
    also carries, say, a heading angle. ``None`` means all coordinates.
    """

    box: HyperRectangle
    axes: tuple | None = None

    def __post_init__(self):
        if not isinstance(self.box, HyperRectangle):
            object.__setattr__(self, "box", HyperRectangle.from_bounds(self.box))
        _check_axes(self.axes, self.box.n, self)


@dataclass(frozen=True)
class Ball:
    """Euclidean ball obstacle, optionally restricted to a subset of axes."""

    center: tuple
    radius: float
    axes: tuple | None = None

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        if not c:
            raise ConstructionError("ball center must be non-empty")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ConstructionError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        _check_axes(self.axes, len(c), self)


ObstacleShape = Union[Rect, Ball]


def _check_axes(axes, k, shape):
    if axes is None:
        return
    axes = tuple(int(a) for a in axes)
    if len(axes) != k or len(set(axes)) != k or min(axes) < 0:
        raise ConstructionError(f"axes {axes} do not match a {k}-dimensional shape")
    object.__setattr__(shape, "axes", axes)


def _own_dim(shape) -> int:
    if isinstance(shape, HyperRectangle):
        return shape.n
    if isinstance(shape, Rect):
        return shape.box.n
    return len(shape.center)


def constrained_axes(shape, n: int) -> tuple:
    """State coordinates that ``shape`` actually restricts in an n-dim state."""
    axes = getattr(shape, "axes", None)
    if axes is None:
        if _own_dim(shape) != n:
            raise DimensionError(f"shape of dimension {_own_dim(shape)} used in a {n}-dim state")
        return tuple(range(n))
    if max(axes) >= n:
        raise DimensionError(f"shape axes {axes} exceed state dimension {n}")
    return axes


def project(shape, i: int) -> Interval:
    """Projection of ``shape`` on coordinate ``i`` as a closed interval."""
    axes = getattr(shape, "axes", None)
    if axes is not None:
        if i < 0:
            raise DimensionError(f"dimension index {i} out of range")
        if i not in axes:
            return UNBOUNDED
        i = axes.index(i)
    k = _own_dim(shape)
    if not 0 <= i < k:
        raise DimensionError(f"dimension index {i} out of range for a {k}-dim set")
    if isinstance(shape, HyperRectangle):
        return shape.dims[i]
    if isinstance(shape, Rect):
        return shape.box.dims[i]
    c = shape.center[i]
    return Interval(c - shape.radius, c + shape.radius)


def _local_coords(shape, x: np.ndarray) -> np.ndarray:
    """Restrict the last axis of ``x`` to the coordinates ``shape`` lives in."""
    axes = getattr(shape, "axes", None)
    k = _own_dim(shape)
    if axes is None:
        if x.shape[-1] != k:
            raise DimensionError(f"state has {x.shape[-1]} entries, set has dimension {k}")
        return x
    if x.shape[-1] <= max(axes):
        raise DimensionError(f"state has {x.shape[-1]} entries, set uses axes {axes}")
    return x[..., list(axes)]


def contains_points(shape, xs) -> np.ndarray:
    """Vectorised membership test; ``xs`` has shape (..., n)."""
    xs = np.asarray(xs, dtype=float)
    z = _local_coords(shape, xs)
    if isinstance(shape, (HyperRectangle, Rect)):
        box = shape if isinstance(shape, HyperRectangle) else shape.box
        return np.all((z >= box.lo) & (z <= box.hi), axis=-1)
    d = z - np.asarray(shape.center)
    return np.einsum("...i,...i->...", d, d) <= shape.radius ** 2


def contains(shape, x) -> bool:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError("contains expects a single state vector")
    return bool(contains_points(shape, x))


def hull(sets: Sequence) -> HyperRectangle:
    """Smallest axis-aligned box containing every set in ``sets``."""
    if len(sets) == 0:
        raise ConstructionError("hull of an empty collection")
    n = max(_own_dim(s) if getattr(s, "axes", None) is None else max(s.axes) + 1 for s in sets)
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    for s in sets:
        if getattr(s, "axes", None) is None and _own_dim(s) != n:
            raise DimensionError("hull of sets with inconsistent dimensions")
        for i in range(n):
            p = project(s, i)
            lo[i] = min(lo[i], p.lo)
            hi[i] = max(hi[i], p.hi)
    return HyperRectangle.from_bounds(zip(lo, hi))


def _times_states(traj):
    t = np.asarray(traj.t if hasattr(traj, "t") else traj[0], dtype=float)
    x = np.asarray(traj.x if hasattr(traj, "x") else traj[1], dtype=float)
    return t, x


def intersection_window(traj, obstacle) -> tuple | None:
    """First and last sample times at which the trajectory lies in ``obstacle``.

    ``traj`` is anything exposing ``t`` (N,) and ``x`` (N, n) arrays, or a
    ``(t, x)`` pair. Times are resolved on the sample grid only.
    """
    t, x = _times_states(traj)
    hit = np.flatnonzero(contains_points(obstacle, x))
    if hit.size == 0:
        return None
    return float(t[hit[0]]), float(t[hit[-1]])


def projection_entry_time(traj, interval: Interval, i: int) -> float:
    """First sample time at which coordinate ``i`` lies in ``interval`` (inf if never)."""
    t, x = _times_states(traj)
    xi = x[:, i]
    hit = np.flatnonzero((xi >= interval.lo) & (xi <= interval.hi))
    return float(t[hit[0]]) if hit.size else math.inf


@dataclass(frozen=True)
class Environment:
    """State space X, target T and obstacle list making up one problem instance."""

    state_space: HyperRectangle
    target: HyperRectangle
    obstacles: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        X, T = self.state_space, self.target
        n = X.n
        if T.n != n:
            raise ConstructionError(f"target has dimension {T.n}, state space {n}")
        for i in range(n):
            if not (X.dims[i].lo <= T.dims[i].lo and T.dims[i].hi <= X.dims[i].hi):
                raise ConstructionError(f"target not inside state space along dimension {i}")
        for j, obs in enumerate(self.obstacles):
            for i in constrained_axes(obs, n):
                p = project(obs, i)
                if p.lo < X.dims[i].lo or p.hi > X.dims[i].hi:
                    raise ConstructionError(
                        f"obstacle {j} leaves the state space along dimension {i}")
        if self.obstacles and _target_interior_covered(self):
            raise ConstructionError("target interior is entirely covered by obstacles")

    @property
    def n(self) -> int:
        return self.state_space.n

    def in_obstacle(self, x) -> list:
        return [j for j, o in enumerate(self.obstacles) if contains(o, x)]


def _target_interior_covered(env: Environment) -> bool:
    # Coarse interior lattice; one free point is enough for a valid eta.
    T = env.target
    per_dim = min(9, max(1, int(20000 ** (1.0 / T.n))))
    axes = [np.linspace(d.lo, d.hi, per_dim + 2)[1:-1] for d in T.dims]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, T.n)
    free = np.ones(len(grid), dtype=bool)
    for o in env.obstacles:
        free &= ~contains_points(o, grid)
    return not free.any()
