"""Cyclic projections with a step size that keeps switching.

Holding lambda at eps3 for a long time pulls the iterates to the eps3-cycle
(height -0.5); switching to eps4 pulls them to height +0.5, and so on. The
process does not settle, even though each constant phase converges.
"""
import sys
from pathlib import Path

import numpy as np

from cyclicproj import counterexample as ce
from cyclicproj import engine
from cyclicproj.svg import Figure

loops = int(sys.argv[1]) if len(sys.argv) > 1 else 30_000
out = Path(sys.argv[2] if len(sys.argv) > 2 else "demo_output")
out.mkdir(exist_ok=True)
model = ce.build_model(12)
e3 = ce.epsilon_of_contact(model, ce.path_point(model, 3, 0.25))
e4 = ce.epsilon_of_contact(model, ce.path_point(model, 4, 0.25))
phases = [(e3, loops), (e4, loops), (e3, loops), (e4, loops)]
print(f"eps3={e3:.5f} (height -0.5), eps4={e4:.5f} (height +0.5), {loops} loops per phase")

traj = engine.run_lambda_process(model.sets3d, np.zeros(3), engine.piecewise_schedule(phases, 3),
                                 record_every=100)
per = loops // 100
for n, (e, _) in enumerate(phases):
    z = traj.points[(n + 1) * per - 1, 2]
    print(f"phase {n + 1}: lambda={e:.5f}  height at end {z:+.5f}")

fig = Figure(title="height of the lambda-process", xlabel="loop", ylabel="z")
fig.polyline(np.column_stack([traj.index / 3, traj.points[:, 2]]), stroke="#2471a3", width=1.0)
fig.save(out / "lambda_heights.svg")
