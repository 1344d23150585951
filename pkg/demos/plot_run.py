"""Plot a CLI run: planar path with obstacles, and each coordinate inside its tube.

Run:
    funnel-ras ras --spec src/funnel_ras/presets/omni_arena.json --out runs/arena
    python3 demos/plot_run.py runs/arena

Reads the plot_<i>.json files the CLI writes and saves arena.png and
tubes_<i>.png next to them. Needs matplotlib.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from funnel_ras.fileio import read_json  # noqa: E402

out = Path(sys.argv[1] if len(sys.argv) > 1 else "runs/arena")
files = sorted(out.glob("plot_*.json"))
if not files:
    sys.exit(f"no plot_*.json in {out}; run funnel-ras first")

fig, ax = plt.subplots(figsize=(6, 6))
for path in files:
    data = read_json(path)
    s = {d["label"]: d["values"] for d in data["series"]}
    ax.plot(s["x_1"], s["x_2"], lw=1.5, label=path.stem.replace("plot_", "start "))
    ax.plot(s["x_1"][0], s["x_2"][0], "ko", ms=4)

    fig_t, axes = plt.subplots(len([k for k in s if k.startswith("x_")]), 1, sharex=True,
                               figsize=(7, 6))
    for i, axi in enumerate(axes, 1):
        axi.fill_between(s["t"], s[f"gammaL_{i}"], s[f"gammaU_{i}"], color="C0", alpha=0.2,
                         label="adapted tube")
        if f"rhoL_{i}" in s:
            axi.plot(s["t"], s[f"rhoL_{i}"], "k:", lw=0.8, label="reach tube")
            axi.plot(s["t"], s[f"rhoU_{i}"], "k:", lw=0.8)
        axi.plot(s["t"], s[f"x_{i}"], "C3", lw=1.2, label="state")
        axi.set_ylabel(f"x{i}")
    axes[0].legend(loc="upper right", fontsize=7)
    axes[-1].set_xlabel("t")
    fig_t.tight_layout()
    fig_t.savefig(out / f"tubes_{path.stem.split('_')[1]}.png", dpi=120)
    plt.close(fig_t)

(x0, x1), (y0, y1) = data["state_space"][:2]
(tx0, tx1), (ty0, ty1) = data["target"][:2]
ax.add_patch(plt.Rectangle((tx0, ty0), tx1 - tx0, ty1 - ty0, color="g", alpha=0.3))
for obs in data["obstacles"]:
    xs, ys = zip(*obs["outline"])
    ax.fill(xs, ys, color="0.4")
ax.set_xlim(x0, x1)
ax.set_ylim(y0, y1)
ax.set_aspect("equal")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(out / "arena.png", dpi=120)
print(f"wrote {out / 'arena.png'} and {len(files)} tube plots")
