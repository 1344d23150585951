"""Closed-form funnel control laws.

Both laws share one shape,

    u = -g^T (g g^T)^{-1} (k * xi * eps - 0.5 * width_dot * e),

evaluated against the reach funnel (rho_L, rho_U) or the adaptive funnel
(gamma_L, gamma_U). The minus sign multiplies both terms, so the
width-rate term feeds forward +0.5 * width_dot * e and keeps the normalized
error still while the funnel contracts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .adaptive import ModifiedFunnel
from .circumvent import transition_mesh
from .errors import AssumptionViolationError, FunnelViolationError, ParameterError
from .plants import Plant
from .reach import ReachFunnel

XI_MODES = ("elementwise", "scalar")


@dataclass(frozen=True)
class ControllerGain:
    k: float = 1.0

    def __post_init__(self):
        if not self.k > 0:
            raise ParameterError(f"controller gain must be positive, got {self.k}")


class ControlOutput(NamedTuple):
    u: np.ndarray
    e: np.ndarray
    eps: np.ndarray
    xi: np.ndarray
    width_dot: np.ndarray


def right_pseudoinverse(G) -> np.ndarray:
    """G^T (G G^T)^{-1}, computed through a Cholesky factor of G G^T."""
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] > G.shape[1]:
        raise AssumptionViolationError(f"G of shape {G.shape} has no right inverse")
    M = G @ G.T
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise AssumptionViolationError("G G^T is not positive definite") from None
    d = np.diag(L)
    if d.min() <= 1e-12 * max(d.max(), 1.0):
        raise AssumptionViolationError("G G^T is numerically singular")
    # (G G^T)^{-1} G = L^{-T} L^{-1} G
    Y = np.linalg.solve(L.T, np.linalg.solve(L, G))
    return Y.T


def _apply_input_map(plant: Plant, x, v) -> np.ndarray:
    G = plant.g(x)
    if plant.orthogonal_g:
        return G.T @ v
    return right_pseudoinverse(G) @ v


def control_from_bounds(plant: Plant, x, lower, upper, width_dot, k: float,
                        xi_mode: str = "elementwise") -> ControlOutput:
    """Evaluate the funnel control law for explicit bounds and width rate."""
    x = np.asarray(x, dtype=float)
    width = upper - lower
    e = (2.0 * x - (upper + lower)) / width
    inside = np.abs(e) < 1.0
    if not inside.all():
        dims = np.flatnonzero(~inside).tolist()
        raise FunnelViolationError(f"state outside the funnel in dims {dims}", dims=dims)
    eps = np.log1p(e) - np.log1p(-e)
    if xi_mode == "elementwise":
        xi = 4.0 / (width * (1.0 - e * e))
    elif xi_mode == "scalar":
        xi = 4.0 / (width * (1.0 - float(e @ e)))
        if not np.all(xi > 0):
            raise FunnelViolationError("|e| >= 1: scalar barrier gain undefined",
                                       dims=list(range(len(e))))
    else:
        raise ParameterError(f"unknown xi mode {xi_mode!r}")
    v = -k * xi * eps + 0.5 * width_dot * e
    u = _apply_input_map(plant, x, v)
    return ControlOutput(u, e, eps, xi, width_dot)


def reach_control(plant: Plant, funnel: ReachFunnel, gain: ControllerGain, x, t: float,
                  xi_mode: str = "elementwise") -> ControlOutput:
    rL, rU, rLd, rUd = funnel.bounds(t)
    return control_from_bounds(plant, x, rL, rU, rUd - rLd, gain.k, xi_mode)


def ras_control(plant: Plant, mf: ModifiedFunnel, alpha, gain: ControllerGain, x, t: float,
                xi_mode: str = "elementwise") -> ControlOutput:
    g, _, _, _ = mf.evaluate(np.asarray(alpha, dtype=float), t)
    return control_from_bounds(plant, x, g.lower, g.upper, g.d_dot, gain.k, xi_mode)


class LoopEval(NamedTuple):
    xdot: np.ndarray
    alpha_dot: np.ndarray
    u: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    psi: np.ndarray


class FunnelLoop:
    """Closed loop x' = f + g u(x, alpha, t) with alpha' from the adaptive law.

    A plain reach funnel is wrapped as an adaptive funnel without bumps, for
    which alpha stays at zero and the law reduces to the reach controller.
    """

    def __init__(self, plant: Plant, funnel, gain: ControllerGain | float = 1.0,
                 xi_mode: str = "elementwise"):
        if isinstance(funnel, ReachFunnel):
            funnel = ModifiedFunnel(funnel)
        if not isinstance(gain, ControllerGain):
            gain = ControllerGain(float(gain))
        if xi_mode not in XI_MODES:
            raise ParameterError(f"unknown xi mode {xi_mode!r}")
        self.plant = plant
        self.funnel = funnel
        self.gain = gain
        self.xi_mode = xi_mode

    def __call__(self, x, alpha, t: float) -> LoopEval:
        gb, adot, psi, _ = self.funnel.evaluate(alpha, t)
        out = control_from_bounds(self.plant, x, gb.lower, gb.upper, gb.d_dot,
                                  self.gain.k, self.xi_mode)
        xdot = self.plant.f(x) + self.plant.g(x) @ out.u
        return LoopEval(xdot, adot, out.u, gb.lower, gb.upper, psi)

    def mesh(self) -> np.ndarray:
        """Time points the integrator must step through to resolve bump edges."""
        pts = [transition_mesh(cf) for cf in self.funnel.circumvents]
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)
