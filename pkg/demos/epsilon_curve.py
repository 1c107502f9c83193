"""The closed-form relaxation parameter eps(c) along the zig-zag path.

eps(c) falls strictly along each segment and jumps down at every vertex.
The gaps between segments are the plateaus where the contact point sits at
a vertex. The script also checks the formula against a direct root find of
the projection condition.
"""
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from cyclicproj import counterexample as ce
from cyclicproj.svg import Figure

K = int(sys.argv[1]) if len(sys.argv) > 1 else 12
out = Path(sys.argv[2] if len(sys.argv) > 2 else "demo_output")
out.mkdir(exist_ok=True)
model = ce.build_model(K)

fig = Figure(title=f"eps(c) along the path (K = {K})", xlabel="path position", ylabel="epsilon")
worst = 0.0
for k in range(1, K):
    s = np.linspace(0, 1, 60)
    e = [ce.epsilon_of_contact(model, ce.path_point(model, k, x)) for x in s]
    fig.polyline(np.column_stack([k - 1 + s, e]), stroke="#2471a3")
    lo, hi = ce.plateau_range(model, k)
    print(f"segment {k:2d}: eps from {e[0]:.5f} down to {e[-1]:.5f};  plateau at v_{k}: [{lo:.5f}, {hi:.5f}]")
    # the cycle supported by (a, b, c) must project onto c: its offset is normal to the segment
    d = model.v[k] - model.v[k - 1]
    for x in (0.1, 0.5, 0.9):
        c = ce.path_point(model, k, x)
        root = brentq(lambda t: (ce.cycle_from_support_2d(t, c.point)[1] - c.point) @ d, 1e-9, 1)
        worst = max(worst, abs(root - ce.epsilon_of_contact(model, c)))
print(f"largest disagreement with the root find: {worst:.2e}")
fig.save(out / "epsilon_of_contact.svg")
