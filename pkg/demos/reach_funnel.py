"""A single integrator driven into a target box by the reach funnel alone.

Run:  python3 demos/reach_funnel.py

The funnel starts as the whole state space and shrinks exponentially onto a
small box inside the target. The controller only has to keep the state
strictly between the two moving bounds, so reaching the target is a side
effect of the funnel closing. The printout shows the state against the
funnel at a few times and when the target was entered.
"""

import numpy as np

from funnel_ras.controller import FunnelLoop
from funnel_ras.geometry import Environment, HyperRectangle
from funnel_ras.plants import single_integrator
from funnel_ras.reach import make_reach_funnel
from funnel_ras.simulator import SimConfig, simulate

env = Environment(HyperRectangle.from_bounds([[-10, 10], [-10, 10]]),
                  HyperRectangle.from_bounds([[7, 9], [7, 9]]))
plant = single_integrator(2)
funnel = make_reach_funnel(env, l=0.7, rho_inf=0.05)
print("funnel centre", funnel.eta, "final half-widths", funnel.c_hi * funnel.rho_inf)

traj, report = simulate(plant, FunnelLoop(plant, funnel, gain=1.0), np.array([-8.0, -8.0]),
                        cfg=SimConfig(h=0.005, horizon=12.0), env=env)

print(f"\n{'t':>6} {'x1':>8} {'lower1':>8} {'upper1':>8} {'|u|':>8}")
for t in (0, 0.5, 1, 2, 4, 8, 12):
    k = int(round(t / 0.005))
    print(f"{traj.t[k]:6.2f} {traj.x[k, 0]:8.3f} {traj.gamma_L[k, 0]:8.3f} "
          f"{traj.gamma_U[k, 0]:8.3f} {np.linalg.norm(traj.u[k]):8.3f}")

print(f"\ntarget entered at t = {report.reached_target_at:.3f}, left: {report.left_target_at}")
print(f"funnel violations: {report.funnel_violations or 'none'}")
