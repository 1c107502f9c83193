"""Under-relaxed projections onto two vertical segments and a cylinder.

Each trajectory stays in the horizontal plane of its start, and the limit
cycle shrinks as the relaxation parameter gets smaller. The script writes
one SVG per epsilon into the output directory (default: ./demo_output).
"""
import sys
from pathlib import Path

import numpy as np

from cyclicproj import counterexample as ce
from cyclicproj import engine
from cyclicproj.cli import _draw_sets_xy
from cyclicproj.svg import Figure

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)
system = ce.example1_system()
starts = [np.array([3.0, -1.0, 0.3]), np.array([-2.5, 0.2, -0.7])]

for eps in (0.75, 0.5, 0.25):
    fig = Figure(title=f"eps = {eps}", xlabel="x", ylabel="y", equal_aspect=True)
    _draw_sets_xy(fig, system)
    for u0, color in zip(starts, ("#1e8449", "#7d3c98")):
        traj = engine.run_lambda_process(system, u0, engine.constant_schedule(eps, 60, 3), record_loops=True)
        path = np.vstack([u0[None, :], *traj.loops])
        cyc = engine.solve_cycle(system, path[-1], eps)
        print(f"eps={eps:4}  start z={u0[2]:+.1f}  heights seen {np.unique(path[:, 2])}  "
              f"cycle diameter {cyc.diameter:.4f}")
        fig.polyline(path[:, :2], stroke=color, width=0.8)
        fig.polyline(np.vstack([cyc.u, cyc.u[:1]])[:, :2], stroke=color, width=2.5)
    fig.save(out / f"example1_eps{eps}.svg")

# the least-squares points are the segment x = 0, y = 5/3, |z| <= 1
x = engine.solve_least_squares(system, [0.0, 0.0, 0.4])
print("least-squares point from (0, 0, 0.4):", np.round(x, 10))
