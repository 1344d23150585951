import math

import numpy as np
import pytest

from funnel_ras.controller import FunnelLoop
from funnel_ras.errors import FunnelViolationError, ParameterError
from funnel_ras.geometry import Ball, Environment, HyperRectangle
from funnel_ras.plants import single_integrator
from funnel_ras.reach import make_reach_funnel
from funnel_ras.simulator import (RunReport, SimConfig, check_invariants, integrate_step,
                                  simulate)

ENV1 = Environment(HyperRectangle.from_bounds([[-5, 5]]), HyperRectangle.from_bounds([[3.5, 4.5]]))
SI1 = single_integrator(1)


def run1(x0=-4.0, h=0.005, horizon=15.0):
    loop = FunnelLoop(SI1, make_reach_funnel(ENV1, eta=[4.0]), 1.0)
    return simulate(SI1, loop, np.array([x0]), cfg=SimConfig(h=h, horizon=horizon), env=ENV1)


class TestRK4:
    def test_zero_field(self):
        y = np.array([1.0, -2.0])
        np.testing.assert_array_equal(integrate_step(lambda y, t: np.zeros(2), y, 0.0, 0.1), y)

    def test_exponential(self):
        y1 = integrate_step(lambda y, t: -y, np.array([1.0]), 0.0, 0.1)[0]
        assert y1 == pytest.approx(0.9048375, abs=1e-7)
        assert abs(y1 - math.exp(-0.1)) < 1e-7

    def test_constant_field_exact(self):
        y1 = integrate_step(lambda y, t: np.array([3.0]), np.array([2.0]), 0.0, 0.25)
        assert y1[0] == 2.75

    def test_time_dependent_quadrature(self):
        # y' = 3 t^2 integrates exactly under Simpson weights
        y1 = integrate_step(lambda y, t: np.array([3 * t * t]), np.zeros(1), 1.0, 0.5)
        assert y1[0] == pytest.approx(1.5 ** 3 - 1.0, abs=1e-14)


class TestSimulate:
    def test_reaches_before_funnel_bound(self):
        # The whole funnel sits inside T once 4 - 9 rho >= 3.5, i.e. rho <= 1/18.
        t_bound = -math.log((1 / 18 - 0.05) / 0.95) / 0.7
        traj, rep = run1()
        assert rep.clean
        assert rep.reached_target_at < t_bound
        fine, rep_fine = run1(h=0.0005)
        assert abs(rep_fine.reached_target_at - rep.reached_target_at) <= 0.005
        assert rep.left_target_at is None

    def test_precondition(self):
        with pytest.raises(FunnelViolationError):
            run1(x0=5.0)

    def test_zero_horizon(self):
        traj, rep = run1(horizon=0.0)
        assert len(traj) == 1 and traj.t[0] == 0.0

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            SimConfig(h=0.0)
        with pytest.raises(ParameterError):
            SimConfig(horizon=-1.0)

    def test_bitwise_repeatable(self):
        a, _ = run1()
        b, _ = run1()
        for name in ("t", "x", "u", "gamma_L", "gamma_U", "alpha"):
            assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


class TestChecks:
    def test_accepted_run_is_empty(self):
        _, rep = run1()
        assert rep.obstacle_violations == [] and rep.funnel_violations == []

    def test_edited_trajectory_through_obstacle(self):
        env = Environment(ENV1.state_space, ENV1.target, [Ball((0.0,), 0.5)])
        traj, _ = run1()
        traj.x = traj.x.copy()
        k = 100
        traj.x[k:k + 5, 0] = 0.1
        rep = check_invariants(traj, env)
        assert rep.obstacle_violations[0] == (0, float(traj.t[k]))

    def test_outside_funnel_detected(self):
        traj, _ = run1()
        traj.x = traj.x.copy()
        traj.x[50, 0] = traj.gamma_U[50, 0] + 1.0
        rep = check_invariants(traj, ENV1)
        assert rep.funnel_violations == [(0, float(traj.t[50]))]

    def test_online_equals_offline(self):
        rng = np.random.default_rng(3)
        plant = single_integrator(2)
        X = HyperRectangle.from_bounds([[-10, 10], [-10, 10]])
        for _ in range(100):
            c = rng.uniform(-6, 6, 2)
            T = HyperRectangle.from_bounds([[c[0] - 1, c[0] + 1], [c[1] - 1, c[1] + 1]])
            r = float(rng.uniform(0.5, 3))
            ball = Ball(tuple(rng.uniform(-10 + r, 10 - r, 2)), r)
            obs = [] if np.linalg.norm(np.array(ball.center) - c) < r + 1.5 else [ball]
            env = Environment(X, T, obs)
            loop = FunnelLoop(plant, make_reach_funnel(env), float(rng.uniform(0.5, 2)))
            x0 = rng.uniform(-9.5, 9.5, 2)
            traj, online = simulate(plant, loop, x0, cfg=SimConfig(h=0.02, horizon=6), env=env)
            offline = check_invariants(traj, env, loop.funnel)
            for f in ("reached_target_at", "left_target_at", "obstacle_violations",
                      "funnel_violations", "peak_control_norm", "peak_alpha"):
                assert getattr(offline, f) == getattr(online, f), f


def test_report_round_trip():
    rep = RunReport(reached_target_at=1.5, obstacle_violations=[(0, 2.0)], peak_alpha=[0.0])
    d = rep.to_dict()
    assert d["min_psi_plus_alpha"] is None and d["accepted"] is False
    back = RunReport.from_dict(d)
    assert back == rep
