from dataclasses import replace

import numpy as np
import pytest

from funnel_ras.circumvent import Side, first_obstacle
from funnel_ras.controller import FunnelLoop
from funnel_ras.errors import (GeometricInfeasibilityError, InfeasibleDimensionError,
                               ParameterError, ReplayError, SynthesisError)
from funnel_ras.geometry import Ball, Environment, HyperRectangle, Rect
from funnel_ras.plants import omni_robot
from funnel_ras.simulator import SimConfig, check_invariants, simulate
from funnel_ras.synthesis import Choice, SynthesisParams, replay, synthesize
from scenarios import ARENA_T, ARENA_X

PLANT = omni_robot()
X0 = np.array([5.0, 5.0, 0.5])
WALL = Rect(HyperRectangle.from_bounds([[30, 36], [0, 42]]), axes=(0, 1))
# Sits on the path the closed loop takes once the wall bump is in place.
BALL = Ball((46, 48.2), 2.5, axes=(0, 1))
PARAMS = SynthesisParams(seed=1, sim=SimConfig(h=0.005, horizon=8))


@pytest.fixture(scope="module")
def two_step():
    env = Environment(ARENA_X, ARENA_T, [WALL, BALL])
    return env, synthesize(env, PLANT, X0, PARAMS)


def test_obstacle_free_is_reach_only():
    env = Environment(ARENA_X, ARENA_T)
    res = synthesize(env, PLANT, X0, PARAMS)
    assert res.iterations_used == 0 and res.circumvents == () and res.choice_log == []
    assert res.report.clean
    again = replay(env, PLANT, X0, [], PARAMS)
    assert again.trajectory.x.tobytes() == res.trajectory.x.tobytes()


def test_single_ball_on_path():
    env = Environment(ARENA_X, ARENA_T, [Ball((30, 76), 5.0, axes=(0, 1))])
    res = synthesize(env, PLANT, np.array([10.0, 90.0, -1.0]), replace(PARAMS, seed=0))
    assert res.iterations_used >= 1
    assert res.report.clean
    offline = check_invariants(res.trajectory, env, res.funnel)
    assert offline.obstacle_violations == [] and offline.funnel_violations == []
    assert offline.reached_target_at == res.report.reached_target_at


def test_two_iterations_clean(two_step):
    env, res = two_step
    assert res.iterations_used == 2
    assert [c.obstacle for c in res.choice_log] == [0, 1]
    assert res.report.clean
    assert first_obstacle(res.trajectory, env.obstacles) is None


def test_each_bump_answers_a_real_hit(two_step):
    env, res = two_step
    cfs = res.circumvents
    mf0 = res.funnel.with_circumvents(())
    for q, choice in enumerate(res.choice_log):
        mf = mf0.with_circumvents(cfs[:q])
        traj, _ = simulate(PLANT, FunnelLoop(PLANT, mf), X0, cfg=PARAMS.sim, env=env)
        hit = first_obstacle(traj, env.obstacles)
        assert hit is not None and hit[0] == choice.obstacle
        assert tuple(hit[1]) == choice.window
        # bumps accumulate: every earlier bump is still present, unchanged
        assert cfs[:q] == res.funnel.circumvents[:q]


def test_standalone_controller_reproduces_trajectory(two_step):
    env, res = two_step
    traj, rep = simulate(PLANT, FunnelLoop(PLANT, res.funnel), X0, cfg=PARAMS.sim, env=env)
    assert traj.x.tobytes() == res.trajectory.x.tobytes()
    assert traj.u.tobytes() == res.trajectory.u.tobytes()
    assert rep == res.report


def test_seed_determinism_and_replay(two_step):
    env, res = two_step
    again = synthesize(env, PLANT, X0, PARAMS)
    assert again.choice_log == res.choice_log
    assert again.report == res.report
    assert again.trajectory.x.tobytes() == res.trajectory.x.tobytes()
    logged = [c.to_dict() for c in res.choice_log]
    rep = replay(env, PLANT, X0, logged, PARAMS)
    assert rep.trajectory.x.tobytes() == res.trajectory.x.tobytes()
    assert rep.choice_log == res.choice_log


def test_replay_rejects_bad_logs(two_step):
    env, res = two_step
    log = list(res.choice_log)
    bad_dim = [replace(log[0], dim=2)] + log[1:]
    with pytest.raises(ReplayError):
        replay(env, PLANT, X0, bad_dim, PARAMS)
    with pytest.raises(ReplayError):
        replay(env, PLANT, X0, log[:1], PARAMS)
    with pytest.raises(ReplayError):
        replay(env, PLANT, X0, log + [log[-1]], PARAMS)
    wrong_obstacle = [replace(log[0], obstacle=1)] + log[1:]
    with pytest.raises(ReplayError):
        replay(env, PLANT, X0, wrong_obstacle, PARAMS)


def test_iteration_cap():
    env = Environment(ARENA_X, ARENA_T, [WALL, BALL])
    with pytest.raises(SynthesisError) as info:
        synthesize(env, PLANT, X0, replace(PARAMS, max_iterations=1))
    assert len(info.value.choice_log) == 1
    assert info.value.report is not None


def test_adaptive_breakdown_is_reported():
    # The second bump rises while it conflicts deeply with the reach funnel,
    # so psi + alpha hits the guard and the run is reported, not hidden.
    env = Environment(ARENA_X, ARENA_T, [WALL, Ball((50, 52), 3.0, axes=(0, 1))])
    with pytest.raises(SynthesisError) as info:
        synthesize(env, PLANT, X0, replace(PARAMS, seed=0))
    assert "AdaptiveSingularityError" in str(info.value)
    assert info.value.report.funnel_violations


def test_full_span_obstacle():
    band = Rect(HyperRectangle.from_bounds([[40, 46], [0, 100]]), axes=(0, 1))
    env = Environment(ARENA_X, ARENA_T, [band])
    with pytest.raises(InfeasibleDimensionError) as info:
        synthesize(env, PLANT, X0, PARAMS)
    assert isinstance(info.value, GeometricInfeasibilityError)
    assert "spans the whole" in str(info.value)


def test_input_checks():
    env = Environment(ARENA_X, ARENA_T, [WALL])
    with pytest.raises(ParameterError):
        synthesize(env, PLANT, np.array([33.0, 10.0, 0.0]), PARAMS)
    with pytest.raises(ParameterError):
        SynthesisParams(max_iterations=0)
    with pytest.raises(ParameterError):
        SynthesisParams(delta_t=0.001)


def test_choice_round_trip():
    c = Choice(2, 1, Side.UPPER, "widen", (0.5, 1.25))
    d = c.to_dict()
    assert d == {"obstacle": 2, "dim": 1, "side": "upper", "action": "widen", "window": [0.5, 1.25]}
    assert Choice.from_dict(d) == c
