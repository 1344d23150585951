"""Adaptive funnel: reach funnel + circumvent bumps + adaptive widening alpha.

For a bump on the lower boundary of coordinate i the bounds become

    gamma_L = smax(rho_L, beta),      gamma_U = rho_U + alpha

(and the mirror image for an upper bump), with

    alpha_dot = theta / (psi + alpha) - kappa * alpha,
    theta     = theta0 * (1 - tanh(s * psi)),
    psi       = rho_U - beta - mu      (lower bump)
              = beta - rho_L - mu      (upper bump).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .circumvent import CircumventFn, Side, eval_beta
from .errors import AdaptiveSingularityError, DimensionError, FunnelCollapseError, ParameterError
from .reach import ReachFunnel


def smooth_max(a, b, nu):
    """Log-sum-exp max, (1/nu) ln(e^{nu a} + e^{nu b}), evaluated without overflow."""
    if not nu > 0:
        raise ParameterError("nu must be positive")
    hi = np.maximum(a, b)
    return hi + np.log1p(np.exp(-nu * np.abs(np.subtract(a, b)))) / nu


def smooth_min(a, b, nu):
    return -smooth_max(-np.asarray(a, dtype=float), -np.asarray(b, dtype=float), nu)


def smooth_max_weight(a, b, nu):
    """d smax / d a; the weight on b is one minus this."""
    z = nu * np.subtract(a, b)
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def smooth_max_dot(a, b, a_dot, b_dot, nu):
    w = smooth_max_weight(a, b, nu)
    return w * a_dot + (1.0 - w) * b_dot


def smooth_min_dot(a, b, a_dot, b_dot, nu):
    # smin(a, b) = -smax(-a, -b): weight on a is sigmoid(nu (b - a)).
    w = smooth_max_weight(b, a, nu)
    return w * a_dot + (1.0 - w) * b_dot


@dataclass(frozen=True)
class AdaptiveParams:
    mu: float = 10.0
    kappa: float = 0.3
    theta0: float = 0.1
    nu: float | None = None
    s: float | None = None

    def __post_init__(self):
        for name in ("mu", "kappa", "theta0", "nu", "s"):
            v = getattr(self, name)
            if v is not None and not (v > 0 and math.isfinite(v)):
                raise ParameterError(f"{name} must be positive and finite, got {v}")

    def resolved(self, largest_side: float) -> "AdaptiveParams":
        """Fill in nu = 50 / largest_side and s = 10 / mu where left unset."""
        return AdaptiveParams(self.mu, self.kappa, self.theta0,
                              self.nu if self.nu is not None else 50.0 / largest_side,
                              self.s if self.s is not None else 10.0 / self.mu)

    @property
    def gap(self) -> float:
        """Smallest admissible psi + alpha before the adaptive law is declared singular."""
        return 1e-6 * self.mu


class GammaBounds(NamedTuple):
    lower: np.ndarray
    upper: np.ndarray
    s: np.ndarray
    d: np.ndarray
    s_dot: np.ndarray
    d_dot: np.ndarray
    lower_dot: np.ndarray
    upper_dot: np.ndarray


@dataclass(frozen=True, eq=False)
class ModifiedFunnel:
    reach: ReachFunnel
    circumvents: tuple = ()
    params: AdaptiveParams = field(default_factory=AdaptiveParams)

    def __post_init__(self):
        n = self.reach.n
        cfs = tuple(self.circumvents)
        for cf in cfs:
            if not 0 <= cf.dim < n:
                raise DimensionError(f"circumvent on dimension {cf.dim} in a {n}-dim funnel")
        object.__setattr__(self, "circumvents", cfs)
        object.__setattr__(self, "params",
                           self.params.resolved(float(np.max(self.reach.c_lo + self.reach.c_hi))))
        x_lo = self.reach.eta - self.reach.c_lo
        x_hi = self.reach.eta + self.reach.c_hi
        for cf in cfs:
            bound = x_lo[cf.dim] if cf.side is Side.LOWER else x_hi[cf.dim]
            if not math.isclose(cf.base, bound, rel_tol=1e-12, abs_tol=1e-12):
                raise ParameterError(
                    f"circumvent base {cf.base} differs from the state bound {bound} "
                    f"on dimension {cf.dim}")
        lower = [[] for _ in range(n)]
        upper = [[] for _ in range(n)]
        for cf in cfs:
            (lower if cf.side is Side.LOWER else upper)[cf.dim].append(cf)
        object.__setattr__(self, "_lower", lower)
        object.__setattr__(self, "_upper", upper)
        object.__setattr__(self, "_active_dims",
                           tuple(i for i in range(n) if lower[i] or upper[i]))

    @property
    def n(self) -> int:
        return self.reach.n

    @property
    def active_dims(self) -> tuple:
        """Dimensions carrying at least one circumvent (the only ones alpha can move)."""
        return self._active_dims

    @property
    def both_sided_dims(self) -> tuple:
        return tuple(i for i in range(self.n) if self._lower[i] and self._upper[i])

    def with_circumvents(self, circumvents) -> "ModifiedFunnel":
        return ModifiedFunnel(self.reach, tuple(circumvents), self.params)

    def psi(self, t: float, rho_L=None, rho_U=None) -> np.ndarray:
        if rho_L is None:
            rho_L, rho_U, _, _ = self.reach.bounds(t)
        mu = self.params.mu
        out = np.full(self.n, np.inf)
        for i in self._active_dims:
            vals = [rho_U[i] - eval_beta(cf, t)[0] - mu for cf in self._lower[i]]
            vals += [eval_beta(cf, t)[0] - rho_L[i] - mu for cf in self._upper[i]]
            out[i] = min(vals)
        return out

    def alpha_rate(self, alpha, t: float, rho_L=None, rho_U=None):
        """(alpha_dot, psi, theta) at time ``t``; raises when psi + alpha hits the guard."""
        p = self.params
        alpha = np.asarray(alpha, dtype=float)
        psi = self.psi(t, rho_L, rho_U)
        theta = np.zeros(self.n)
        adot = -p.kappa * alpha
        for i in self._active_dims:
            den = psi[i] + alpha[i]
            if not den > p.gap:
                raise AdaptiveSingularityError(
                    f"psi + alpha = {den:.3e} <= {p.gap:.1e} on dimension {i} at t={t:.6g}")
            theta[i] = p.theta0 * (1.0 - math.tanh(p.s * psi[i]))
            adot[i] += theta[i] / den
        return adot, psi, theta

    def gamma(self, alpha, alpha_dot, t: float, check: bool = True) -> GammaBounds:
        rL, rU, rLd, rUd = self.reach.bounds(t)
        return self._gamma(alpha, alpha_dot, t, rL, rU, rLd, rUd, check)

    def _gamma(self, alpha, alpha_dot, t, rL, rU, rLd, rUd, check=True) -> GammaBounds:
        nu = self.params.nu
        gL, gU, gLd, gUd = rL.copy(), rU.copy(), rLd.copy(), rUd.copy()
        for i in self._active_dims:
            lo_list, up_list = self._lower[i], self._upper[i]
            if up_list:
                gL[i] -= alpha[i]
                gLd[i] -= alpha_dot[i]
            if lo_list:
                gU[i] += alpha[i]
                gUd[i] += alpha_dot[i]
            for cf in lo_list:
                b, bd = eval_beta(cf, t)
                w = _sigmoid(nu * (gL[i] - b))
                gLd[i] = w * gLd[i] + (1.0 - w) * bd
                gL[i] = _smax(gL[i], b, nu)
            for cf in up_list:
                b, bd = eval_beta(cf, t)
                w = _sigmoid(nu * (b - gU[i]))
                gUd[i] = w * gUd[i] + (1.0 - w) * bd
                gU[i] = -_smax(-gU[i], -b, nu)
        if check and np.any(~(gU > gL)):
            dims = np.flatnonzero(~(gU > gL)).tolist()
            raise FunnelCollapseError(f"upper bound not above lower bound in dims {dims} at t={t:.6g}")
        return GammaBounds(gL, gU, gU + gL, gU - gL, gUd + gLd, gUd - gLd, gLd, gUd)

    def evaluate(self, alpha, t: float):
        """One pass over the funnel: (GammaBounds, alpha_dot, psi, theta)."""
        rL, rU, rLd, rUd = self.reach.bounds(t)
        if self._active_dims:
            adot, psi, theta = self.alpha_rate(alpha, t, rL, rU)
        else:
            adot = -self.params.kappa * np.asarray(alpha, dtype=float)
            psi, theta = np.full(self.n, np.inf), np.zeros(self.n)
        g = self._gamma(alpha, adot, t, rL, rU, rLd, rUd)
        return g, adot, psi, theta


def _smax(a: float, b: float, nu: float) -> float:
    return max(a, b) + math.log1p(math.exp(-nu * abs(a - b))) / nu


def _sigmoid(z: float) -> float:
    return 0.5 * (1.0 + math.tanh(0.5 * z))


def eval_psi(mf: ModifiedFunnel, i: int, t: float) -> float:
    if not 0 <= i < mf.n:
        raise DimensionError(f"dimension index {i} out of range")
    if t < 0:
        raise ParameterError(f"time must be non-negative, got {t}")
    return float(mf.psi(t)[i])


def alpha_dot(mf: ModifiedFunnel, alpha, t: float) -> np.ndarray:
    return mf.alpha_rate(alpha, t)[0]


def eval_gamma(mf: ModifiedFunnel, alpha, alpha_dot, t: float) -> GammaBounds:
    """Modified bounds and their derivatives given alpha and its rate."""
    if t < 0:
        raise ParameterError(f"time must be non-negative, got {t}")
    alpha = np.asarray(alpha, dtype=float)
    if not np.all(np.isfinite(alpha)):
        raise ParameterError("alpha must be finite")
    return mf.gamma(alpha, np.asarray(alpha_dot, dtype=float), t)
