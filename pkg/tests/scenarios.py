"""Problem instances shared by the unit and acceptance tests."""

import math

import numpy as np

from funnel_ras.controller import FunnelLoop
from funnel_ras.fileio import load_runspec, preset_path
from funnel_ras.geometry import Ball, Environment, HyperRectangle, Rect, contains
from funnel_ras.plants import omni_robot, single_integrator
from funnel_ras.reach import make_reach_funnel
from funnel_ras.simulator import SimConfig, simulate

PI = math.pi

# Arena side 100 with the target centre 30 away from the nearest walls, so
# the tolerance band mu = 10 is a small fraction of the workspace.
ARENA_X = HyperRectangle.from_bounds([[0, 100], [0, 100], [-PI, PI]])
ARENA_T = HyperRectangle.from_bounds([[66, 74], [66, 74], [-PI, PI]])


def integrator_2d_env():
    return Environment(HyperRectangle.from_bounds([[-10, 10], [-10, 10]]),
                       HyperRectangle.from_bounds([[7, 9], [7, 9]]))


def integrator_2d_run(h=0.005, horizon=30.0):
    env = integrator_2d_env()
    plant = single_integrator(2)
    loop = FunnelLoop(plant, make_reach_funnel(env, l=0.7, rho_inf=0.05), 1.0)
    traj, rep = simulate(plant, loop, np.array([-8.0, -8.0]),
                         cfg=SimConfig(h=h, horizon=horizon), env=env)
    return env, loop, traj, rep


def omni_arena_spec():
    return load_runspec(preset_path("omni_arena"))


def random_single_obstacle_arena(rng: np.random.Generator):
    """One rect or ball placed on the reach path of a random start.

    The obstacle centre is a point the obstacle-free closed loop passes
    between t = 0.5 and t = 2, so the first synthesis run always hits it.
    """
    plant = omni_robot()
    free = Environment(ARENA_X, ARENA_T)
    funnel = make_reach_funnel(free)
    while True:
        x0 = np.array([*rng.uniform(2, 98, 2), rng.uniform(-3, 3)])
        if np.linalg.norm(x0[:2] - 70) <= 45:
            continue
        path, _ = simulate(plant, FunnelLoop(plant, funnel), x0, cfg=SimConfig(h=0.01, horizon=2))
        c = path.x[rng.integers(50, 200), :2]
        if rng.random() < 0.5:
            half = rng.uniform(2, 6, 2)
            obs = Rect(HyperRectangle.from_bounds([[c[0] - half[0], c[0] + half[0]],
                                                   [c[1] - half[1], c[1] + half[1]]]), axes=(0, 1))
        else:
            obs = Ball(tuple(c), float(rng.uniform(2, 6)), axes=(0, 1))
        if contains(obs, x0):
            continue
        return Environment(ARENA_X, ARENA_T, [obs]), x0
