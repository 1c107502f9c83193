"""Under-relaxed cyclic projections, epsilon-cycles and least squares.

A loop of the under-relaxed method visits the sets in order and moves a
fraction ``eps`` of the way towards each projection::

    u <- u + eps * (P_i(u) - u),   i = 1..m

An epsilon-cycle is a fixed point of one full loop.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .convex_sets import ConvexSet, as_vec

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """A fixed-point or descent solver ran out of iterations."""

    def __init__(self, message: str, residual: float, point=None):
        super().__init__(message)
        self.residual = residual
        self.point = point


@dataclass(frozen=True, eq=False)
class SetSystem:
    sets: tuple

    def __init__(self, sets: Sequence[ConvexSet]):
        sets = tuple(sets)
        if len(sets) < 2:
            raise ValueError("a set system needs at least two sets")
        dims = {s.dim for s in sets}
        if len(dims) != 1:
            raise ValueError(f"sets have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "sets", sets)

    @property
    def m(self) -> int:
        return len(self.sets)

    @property
    def dim(self) -> int:
        return self.sets[0].dim

    def __len__(self):
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def __getitem__(self, i):
        return self.sets[i]


@dataclass
class EpsilonCycle:
    epsilon: float
    u: np.ndarray  # (m, d) iterates u_1..u_m
    w: np.ndarray  # (m, d) support, w_i = P_i(u_{i-1})
    residual: float
    loops: int = 0

    @property
    def diameter(self) -> float:
        diff = self.u[:, None, :] - self.u[None, :, :]
        return float(np.sqrt((diff ** 2).sum(-1)).max())


@dataclass
class Trajectory:
    index: np.ndarray  # global iteration index of each sample
    points: np.ndarray  # (n, d)
    steps: np.ndarray  # relaxation parameter used at the sampled step
    loops: list = field(default_factory=list)  # m-tuples at loop ends, if recorded


def _step(cset: ConvexSet, u: np.ndarray, eps: float) -> np.ndarray:
    return u + eps * (cset.project(u).point - u)


def sweep(system: SetSystem, u_start, epsilon: float):
    """One loop of the under-relaxed method.

    Returns:
        ``(u_m, iterates)`` where ``iterates`` has shape ``(m, d)``.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    u = as_vec(u_start, system.dim)
    out = np.empty((system.m, system.dim))
    for i, cset in enumerate(system.sets):
        u = _step(cset, u, epsilon)
        out[i] = u
    return u, out


def _sweep_detail(system: SetSystem, u: np.ndarray, eps: float, jacobian: bool = False):
    # one loop, also returning the faces hit (and the loop Jacobian if asked)
    d = system.dim
    J = np.eye(d) if jacobian else None
    faces = []
    for cset in system.sets:
        res = cset.project(u)
        faces.append(res.active)
        if jacobian:
            J = ((1 - eps) * np.eye(d) + eps * cset.jacobian(u, res)) @ J
        u = u + eps * (res.point - u)
    return u, J, tuple(faces)


def support_of(system: SetSystem, u) -> np.ndarray:
    """``w_i = P_i(u_{i-1})`` with ``u_0 = u_m``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (system.m, system.dim):
        raise ValueError(f"expected {system.m} iterates of dimension {system.dim}")
    return np.stack([system.sets[i].project(u[i - 1]).point for i in range(system.m)])


def cycle_residual(system: SetSystem, u, epsilon: float, w=None) -> float:
    """``max_i |u_i - (1 - eps) u_{i-1} - eps w_i|`` over the cyclic indices."""
    u = np.asarray(u, dtype=float)
    if w is None:
        w = support_of(system, u)
    prev = np.roll(u, 1, axis=0)
    r = u - (prev + epsilon * (w - prev))
    return float(np.sqrt((r ** 2).sum(axis=1)).max())


def make_cycle(system: SetSystem, u, epsilon: float, loops: int = 0) -> EpsilonCycle:
    u = np.array(u, dtype=float)
    w = support_of(system, u)
    return EpsilonCycle(epsilon, u, w, cycle_residual(system, u, epsilon, w), loops)


def solve_cycle(system: SetSystem, u_start, epsilon: float, tol: float = 1e-10,
                max_loops: int = 10_000_000, polish: bool = True,
                check_every: int = 1000) -> EpsilonCycle:
    """Find the epsilon-cycle reached from ``u_start``.

    Loops are repeated until one full loop moves the point by at most
    ``tol * eps``. With ``polish`` enabled (the default) the plain loops are
    interleaved with two shortcuts, both of which only ever move along the
    loop map's own trajectory structure:

    * a semismooth Newton step on ``x -> T(x) - x`` (``T`` = one loop) built
      from the generalized Jacobians of the projections, kept only when it
      at least halves the loop displacement;
    * loop skipping: while the faces hit by the projections do not change,
      the map is affine and a nearly neutral direction is followed by
      jumping ``tau`` loop displacements ahead, with ``tau`` doubled as long
      as the faces stay the same.

    Both matter when the loop map contracts extremely slowly in some
    direction, as for nearly vertical facets of the counterexample.

    Raises:
        ConvergenceError: after ``max_loops`` loops without meeting ``tol``.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = as_vec(u_start, system.dim)
    target = tol * epsilon
    loops = 0
    disp = np.inf
    next_report = check_every
    burst = 8 if polish else check_every

    while loops < max_loops:
        for _ in range(min(burst, max_loops - loops)):
            y, _ = sweep(system, x, epsilon)
            loops += 1
            disp = float(np.linalg.norm(y - x))
            x = y
            if disp <= target:
                break
        if loops >= next_report:
            log.debug("solve_cycle eps=%g loops=%d displacement=%.3e", epsilon, loops, disp)
            next_report += check_every
        if disp <= target:
            break
        if not polish:
            continue

        # Newton on the current affine piece
        for _ in range(50):
            y, J, faces = _sweep_detail(system, x, epsilon, jacobian=True)
            g = y - x
            disp = float(np.linalg.norm(g))
            loops += 1
            if disp <= target:
                break
            step = np.linalg.lstsq(J - np.eye(system.dim), -g, rcond=None)[0]
            y_new, _, _ = _sweep_detail(system, x + step, epsilon)
            loops += 1
            d_new = float(np.linalg.norm(y_new - x - step))
            if d_new <= 0.5 * disp:
                x, disp = x + step, d_new
                continue
            # The piece's fixed point lies beyond its faces: advance along the
            # Newton line, on which the displacement shrinks linearly, up to
            # the last point with unchanged faces.
            lo, hi = 0.0, 1.0
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if _sweep_detail(system, x + mid * step, epsilon)[2] == faces:
                    lo = mid
                else:
                    hi = mid
            loops += 40
            x = x + lo * step
            log.debug("newton clipped at t=%.3g, disp=%.3e, faces=%s", lo, disp, faces)
            break
        if disp <= target:
            break

    if disp > target:
        raise ConvergenceError(
            f"no {epsilon:g}-cycle after {loops} loops (displacement {disp:.3e})", disp, x)
    # the cycle starts from the converged loop endpoint x = u_m
    _, u = sweep(system, x, epsilon)
    return make_cycle(system, u, epsilon, loops)


def iterates_from_support(w, epsilon: float) -> np.ndarray:
    """Recover ``(u_1, u_2, u_3)`` of a 3-set cycle from its support.

    ``u_1 = ((1-eps)^2 w_2 + (1-eps) w_3 + w_1) / (eps^2 - 3 eps + 3)`` and
    cyclic shifts; each ``u_i`` is a convex combination of the ``w_j``.
    """
    w = np.asarray(w, dtype=float)
    if w.shape[0] != 3:
        raise ValueError("closed form holds for three sets only")
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    q = 1.0 - epsilon
    den = epsilon * epsilon - 3.0 * epsilon + 3.0
    w1, w2, w3 = w
    return np.stack([
        (q * q * w2 + q * w3 + w1) / den,
        (q * q * w3 + q * w1 + w2) / den,
        (q * q * w1 + q * w2 + w3) / den,
    ])


def run_lambda_process(system: SetSystem, v_start, schedule: Iterable[float],
                       record_every: int = 1, record_loops: bool = False) -> Trajectory:
    """Cyclic projections with a step size ``lambda_k`` per iteration.

    ``v_{km+i} = v_{km+i-1} + lambda_{km+i} (P_i(v_{km+i-1}) - v_{km+i-1})``.
    The process runs until ``schedule`` is exhausted; the point reached at
    the end of every ``record_every``-th loop is sampled.
    """
    v = as_vec(v_start, system.dim)
    m = system.m
    idx, pts, lams, tuples = [], [], [], []
    cur = np.empty((m, system.dim))
    k = 0
    loop = 0
    for lam in schedule:
        if not 0 < lam <= 1:
            raise ValueError(f"step {lam!r} outside (0, 1]")
        i = k % m
        v = _step(system.sets[i], v, lam)
        cur[i] = v
        k += 1
        if i == m - 1:
            loop += 1
            if loop % record_every == 0:
                idx.append(k)
                pts.append(v.copy())
                lams.append(lam)
                if record_loops:
                    tuples.append(cur.copy())
    return Trajectory(np.array(idx, dtype=int), np.array(pts).reshape(-1, system.dim),
                      np.array(lams), tuples)


def constant_schedule(value: float, loops: int, m: int):
    return itertools.repeat(value, loops * m)


def piecewise_schedule(pieces: Sequence[tuple], m: int):
    """Chain ``(lambda, loops)`` pieces into one step-size iterator."""
    return itertools.chain.from_iterable(constant_schedule(v, n, m) for v, n in pieces)


def least_squares_objective(system: SetSystem, u) -> float:
    """Sum of squared distances ``sum_i d(u, C_i)^2``."""
    u = as_vec(u, system.dim)
    return float(sum(np.sum((u - s.project(u).point) ** 2) for s in system.sets))


def least_squares_gradient(system: SetSystem, u) -> np.ndarray:
    u = as_vec(u, system.dim)
    return 2.0 * sum(u - s.project(u).point for s in system.sets)


def phi(system: SetSystem, u) -> float:
    """Least-squares objective scaled by ``1/(2m)``."""
    return least_squares_objective(system, u) / (2 * system.m)


def solve_least_squares(system: SetSystem, u_start, tol: float = 1e-12,
                        max_iter: int = 1_000_000) -> np.ndarray:
    """Gradient descent with step ``1/(2m)``, i.e. averaged projections."""
    u = as_vec(u_start, system.dim)
    step = 1.0 / (2 * system.m)
    for _ in range(max_iter):
        g = least_squares_gradient(system, u)
        if np.linalg.norm(g) <= tol:
            return u
        u = u - step * g
    raise ConvergenceError(f"least squares did not reach |grad| <= {tol:g}",
                           float(np.linalg.norm(g)), u)


# --- CSV ------------------------------------------------------------------

def _coord_names(dim: int):
    return ["x", "y", "z"][:dim]


def cycles_to_csv(cycles: Sequence[EpsilonCycle]) -> str:
    """CSV with columns ``epsilon, loop, i, x, y[, z], role, residual``."""
    if not cycles:
        return ""
    dim = cycles[0].u.shape[1]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["epsilon", "loop", "i", *_coord_names(dim), "role", "residual"])
    for c in cycles:
        for role, arr in (("iterate", c.u), ("support", c.w)):
            for i, p in enumerate(arr, start=1):
                wr.writerow([f"{c.epsilon:.17g}", c.loops, i,
                             *(f"{v:.17g}" for v in p), role, f"{c.residual:.17g}"])
    return buf.getvalue()


def trajectory_to_csv(traj: Trajectory, dim: int, m: int) -> str:
    """Trajectory rows in the cycle CSV schema.

    With recorded loop tuples every intra-loop iterate is written, otherwise
    only the loop-end samples (``i = m``). The ``residual`` column is empty.
    """
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["epsilon", "loop", "i", *_coord_names(dim), "role", "residual"])
    for n, (k, p, lam) in enumerate(zip(traj.index, traj.points, traj.steps)):
        loop = int(k) // m
        pts = traj.loops[n] if traj.loops else [p]
        first = m - len(pts) + 1
        for i, q in enumerate(pts, start=first):
            wr.writerow([f"{lam:.17g}", loop, i, *(f"{v:.17g}" for v in q), "iterate", ""])
    return buf.getvalue()


def trajectory_from_csv(text: str):
    """Parse :func:`trajectory_to_csv` output into ``(loop, i, eps, points)`` arrays."""
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        return np.zeros(0, int), np.zeros(0, int), np.zeros(0), np.zeros((0, 0))
    cols = _coord_names(3 if "z" in rows[0] else 2)
    loop = np.array([int(r["loop"]) for r in rows])
    i = np.array([int(r["i"]) for r in rows])
    eps = np.array([float(r["epsilon"]) for r in rows])
    pts = np.array([[float(r[c]) for c in cols] for r in rows])
    return loop, i, eps, pts


def cycles_from_csv(text: str) -> list:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        return []
    dim = 3 if "z" in rows[0] else 2
    cols = _coord_names(dim)
    out = []
    for (eps, loop), grp in itertools.groupby(rows, key=lambda r: (r["epsilon"], r["loop"])):
        grp = list(grp)
        u = [[float(r[c]) for c in cols] for r in grp if r["role"] == "iterate"]
        w = [[float(r[c]) for c in cols] for r in grp if r["role"] == "support"]
        out.append(EpsilonCycle(float(eps), np.array(u), np.array(w),
                                float(grp[0]["residual"]), int(loop)))
    return out
