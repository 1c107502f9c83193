"""Cycle heights of the counterexample as epsilon decreases.

Contact parameters s = 0.25 and s = 0.75 on each segment of the zig-zag
path give heights of exactly +-0.5, with the sign flipping from segment to
segment. So the cycles have no limit as epsilon goes to 0.
"""
import sys
from pathlib import Path

import numpy as np

from cyclicproj import counterexample as ce
from cyclicproj.svg import Figure

K = int(sys.argv[1]) if len(sys.argv) > 1 else 12
out = Path(sys.argv[2] if len(sys.argv) > 2 else "demo_output")
out.mkdir(exist_ok=True)
model = ce.build_model(K)
print(f"K={K}: epsilon reachable down to {ce.epsilon_reach(model):.4f}")

contacts = ce.contact_grid(model)
eps = [ce.epsilon_of_contact(model, c) for c in contacts]
points = ce.epsilon_sweep(model, eps)
heights = {}
for c, p in zip(contacts, points):
    heights[(c.k, c.s)] = p.height
    print(f"segment {c.k:2d} s={c.s:.2f}  eps={p.epsilon:.5f}  height {p.height:+.8f}  loops {p.cycle.loops}")
print("oscillation witness:", ce.oscillation_witness(model, heights))

# a dense grid shows the plateaus at +-1 between the segment ranges
dense = np.geomspace(0.999, ce.epsilon_reach(model) * 1.001, 300)
curve = ce.epsilon_sweep(model, dense)
fig = Figure(title=f"cycle height vs epsilon (K = {K})", xlabel="epsilon", ylabel="height")
fig.polyline([[p.epsilon, p.height] for p in curve], stroke="#2471a3")
fig.markers([[p.epsilon, p.height] for p in points], fill="#c0392b", size=3)
fig.save(out / "height_vs_epsilon.svg")
