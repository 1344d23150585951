"""Control-affine plants xdot = f(x) + g(x) u."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AssumptionViolationError, DimensionError, ModelError, ParameterError


@dataclass(frozen=True)
class Plant:
    n: int
    m: int
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    label: str = "plant"
    # Lets the controller skip the pseudo-inverse solve when g(x) is orthogonal.
    orthogonal_g: bool = False

    def check_assumption(self, x) -> None:
        """Fail fast if g(x) g(x)^T is not positive definite at ``x``."""
        G = self.g(np.asarray(x, dtype=float))
        try:
            np.linalg.cholesky(G @ G.T)
        except np.linalg.LinAlgError:
            raise AssumptionViolationError(
                f"g g^T is not positive definite at x={np.asarray(x).tolist()}") from None


def eval_dynamics(plant: Plant, x, u) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (plant.n,):
        raise DimensionError(f"state must have shape ({plant.n},), got {x.shape}")
    if u.shape != (plant.m,):
        raise DimensionError(f"input must have shape ({plant.m},), got {u.shape}")
    xdot = plant.f(x) + plant.g(x) @ u
    if not np.all(np.isfinite(xdot)):
        raise ModelError(f"{plant.label}: non-finite derivative at x={x.tolist()}, u={u.tolist()}")
    return xdot


def single_integrator(n: int) -> Plant:
    if n < 1:
        raise ParameterError("single integrator needs n >= 1")
    zero = np.zeros(n)
    eye = np.eye(n)
    return Plant(n, n, lambda x: zero, lambda x: eye,
                 label=f"single_integrator_{n}d", orthogonal_g=True)


def _omni_g(x):
    c, s = math.cos(x[2]), math.sin(x[2])
    return np.array([[c, s, 0.0],
                     [s, -c, 0.0],
                     [0.0, 0.0, 1.0]])


def omni_robot() -> Plant:
    """Three-wheeled omnidirectional robot, state (x, y, heading), input (u, v, omega).

    The input matrix is orthonormal for every heading, so g g^T = I.
    """
    zero = np.zeros(3)
    return Plant(3, 3, lambda x: zero, _omni_g, label="omni_robot", orthogonal_g=True)


_BUILTIN = {
    "omni_robot": omni_robot,
}


def get_plant(name: str) -> Plant:
    """Look up a built-in plant: ``omni_robot`` or ``single_integrator_<n>d``."""
    if name in _BUILTIN:
        return _BUILTIN[name]()
    if name.startswith("single_integrator_") and name.endswith("d"):
        core = name[len("single_integrator_"):-1]
        if core.isdigit() and int(core) >= 1:
            return single_integrator(int(core))
    raise KeyError(f"unknown plant {name!r}")
