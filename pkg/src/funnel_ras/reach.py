"""Reachability funnel and the error transforms built on it.

Each coordinate i is confined to

    eta_i - c_lo_i * rho_i(t)  <  x_i  <  eta_i + c_hi_i * rho_i(t)

with rho_i(t) = (1 - rho_inf_i) exp(-l_i t) + rho_inf_i. Since rho_i(0) = 1
the funnel starts at the state-space box and shrinks into the target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, DimensionError, FunnelViolationError, ParameterError
from .geometry import Environment, contains

RHO0 = 1.0


@dataclass(frozen=True, eq=False)
class ReachFunnel:
    eta: np.ndarray
    rho_inf: np.ndarray
    l: np.ndarray
    c_lo: np.ndarray
    c_hi: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eta)

    @property
    def rho0(self) -> np.ndarray:
        return np.full(self.n, RHO0)

    def rho(self, t: float):
        """Vector rho(t) and its time derivative."""
        decay = (RHO0 - self.rho_inf) * np.exp(-self.l * t)
        return decay + self.rho_inf, -self.l * decay

    def bounds(self, t: float):
        """(rho_L, rho_U, rho_L_dot, rho_U_dot) at time t, no argument checks."""
        r, rd = self.rho(t)
        return (self.eta - self.c_lo * r, self.eta + self.c_hi * r,
                -self.c_lo * rd, self.c_hi * rd)


def rho_inf_limit(env: Environment, eta) -> np.ndarray:
    """Exclusive upper limit on rho_inf per dimension for the given eta.

    The distance from eta to the target is measured to the nearest face of
    the target's projection, so the asymptotic tube sits inside T even when
    eta is off-centre.
    """
    eta = np.asarray(eta, dtype=float)
    X, T = env.state_space, env.target
    c_lo = eta - X.lo
    c_hi = X.hi - eta
    dist = np.minimum(eta - T.lo, T.hi - eta)
    return np.minimum(RHO0, dist / np.maximum(c_lo, c_hi))


def make_reach_funnel(env: Environment, eta=None, l=0.7, rho_inf=0.05) -> ReachFunnel:
    n = env.n
    T, X = env.target, env.state_space
    eta = T.center if eta is None else np.asarray(eta, dtype=float)
    if eta.shape != (n,):
        raise DimensionError(f"eta must have {n} entries")
    if not np.all((eta > T.lo) & (eta < T.hi)):
        raise ConstructionError(f"eta={eta.tolist()} is not in the interior of the target")
    hit = [j for j, o in enumerate(env.obstacles) if contains(o, eta)]
    if hit:
        raise ConstructionError(f"eta={eta.tolist()} lies inside obstacle(s) {hit}")
    l = np.broadcast_to(np.asarray(l, dtype=float), (n,)).copy()
    rho_inf = np.broadcast_to(np.asarray(rho_inf, dtype=float), (n,)).copy()
    if np.any(l < 0) or not np.all(np.isfinite(l)):
        raise ParameterError(f"decay rates must be finite and >= 0, got {l.tolist()}")
    limit = rho_inf_limit(env, eta)
    bad = np.flatnonzero(~((rho_inf > 0) & (rho_inf < limit)))
    if bad.size:
        i = int(bad[0])
        raise ParameterError(
            f"rho_inf[{i}]={rho_inf[i]:g} outside the admissible range (0, {limit[i]:.6g})")
    return ReachFunnel(eta=eta, rho_inf=rho_inf, l=l,
                       c_lo=eta - X.lo, c_hi=X.hi - eta)


def eval_rho(funnel: ReachFunnel, i: int, t: float):
    if t < 0:
        raise ParameterError(f"time must be non-negative, got {t}")
    if not 0 <= i < funnel.n:
        raise DimensionError(f"dimension index {i} out of range")
    decay = (RHO0 - funnel.rho_inf[i]) * np.exp(-funnel.l[i] * t)
    return float(decay + funnel.rho_inf[i]), float(-funnel.l[i] * decay)


def eval_reach_bounds(funnel: ReachFunnel, t: float):
    """Funnel bounds rho_L, rho_U and their derivatives at time ``t``."""
    if t < 0:
        raise ParameterError(f"time must be non-negative, got {t}")
    return funnel.bounds(t)


def normalized_error(x, lower, upper) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return (x - 0.5 * (upper + lower)) / (0.5 * (upper - lower))


def _check_inside(e):
    if np.any(~(np.abs(e) < 1.0)):
        dims = np.flatnonzero(~(np.abs(e) < 1.0)).tolist()
        raise FunnelViolationError(f"normalized error outside (-1, 1) in dims {dims}", dims=dims)


def transformed_error(e) -> np.ndarray:
    """Log-ratio barrier ln((1 + e) / (1 - e)), i.e. 2 artanh(e)."""
    e = np.asarray(e, dtype=float)
    _check_inside(e)
    return np.log1p(e) - np.log1p(-e)


def inverse_transformed_error(eps) -> np.ndarray:
    return np.tanh(0.5 * np.asarray(eps, dtype=float))


def xi_diag(e, width) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    _check_inside(e)
    return 4.0 / (np.asarray(width, dtype=float) * (1.0 - e * e))


def xi_matrix(e, width) -> np.ndarray:
    """Diagonal gain 4 / (width_i (1 - e_i^2)); ``width`` is upper minus lower bound."""
    return np.diag(xi_diag(e, width))
