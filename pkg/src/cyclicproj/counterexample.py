"""Three compact convex sets in R^3 whose epsilon-cycles do not converge.

``C1`` and ``C2`` are the vertical segments above ``a = (-2, 2)`` and
``b = (2, 2)``; ``C3`` is the closed convex hull of the zig-zag points
``p_k = (cos t_k, sin t_k, (-1)^k)`` with ``t_1 = pi/4`` and ``t_k -> pi/2``.
Only finitely many ``p_k`` can be stored, so the model keeps ``p_1..p_K``
plus, by default, the two accumulation points ``(0, 1, +-1)`` which belong
to the closed hull.

Along each segment ``[v_k, v_{k+1})`` of the projected path the relaxation
parameter of the cycle touching ``c`` has the closed form
``eps(c) = 1 + <b - c, d_k> / <a - c, d_k>``.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .convex_sets import Hull, Point, Segment
from .engine import (ConvergenceError, EpsilonCycle, SetSystem, cycle_residual,
                     iterates_from_support, make_cycle, solve_cycle)

log = logging.getLogger(__name__)

A = np.array([-2.0, 2.0])
B = np.array([2.0, 2.0])


def default_angle(k: int) -> float:
    """``t_k = pi/2 (1 - 1/(2k))``."""
    return 0.5 * math.pi * (1.0 - 1.0 / (2.0 * k))


class EpsilonRangeError(ValueError):
    """Requested epsilon lies outside what the truncated model can represent."""


@dataclass(frozen=True)
class PathPoint:
    """Point ``(1-s) v_k + s v_{k+1}`` of the projected zig-zag path."""

    k: int
    s: float
    point: np.ndarray
    height: float


@dataclass(frozen=True)
class Plateau:
    """Epsilon range on which the contact point sticks at vertex ``v_k``."""

    k: int
    point: np.ndarray
    height: float


@dataclass(frozen=True, eq=False)
class CounterexampleModel:
    K: int
    t: np.ndarray
    v: np.ndarray  # (K, 2)
    p: np.ndarray  # (K, 3)
    sets3d: SetSystem
    sets2d: SetSystem
    include_limit: bool = True

    @property
    def a(self) -> np.ndarray:
        return A.copy()

    @property
    def b(self) -> np.ndarray:
        return B.copy()

    @property
    def n_segments(self) -> int:
        return self.K - 1

    def direction(self, k: int) -> np.ndarray:
        """Unit vector ``d_k`` along ``[v_k, v_{k+1}]`` (1-based ``k``)."""
        self._check_segment(k)
        d = self.v[k] - self.v[k - 1]
        return d / np.linalg.norm(d)

    def vertex_height(self, k: int) -> float:
        return float((-1) ** k)

    def _check_segment(self, k: int):
        if not 1 <= k <= self.K - 1:
            raise ValueError(f"segment index {k} outside 1..{self.K - 1}")


def build_model(K: int = 40, angle_rule: Union[Callable[[int], float], Sequence[float], None] = None,
                include_limit: bool = True) -> CounterexampleModel:
    """Build the counterexample truncated to ``p_1..p_K``.

    Args:
        K: number of zig-zag points kept (``>= 2``).
        angle_rule: callable ``k -> t_k`` or an explicit list of angles;
            defaults to :func:`default_angle`.
        include_limit: add the accumulation points ``(0, 1, +-1)`` to ``C3``
            (and ``(0, 1)`` to its shadow), so the hull contains the vertical
            segment above ``(0, 1)``.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    if angle_rule is None:
        angle_rule = default_angle
    if callable(angle_rule):
        t = np.array([angle_rule(k) for k in range(1, K + 1)], dtype=float)
    else:
        t = np.asarray(angle_rule, dtype=float)[:K]
        if t.shape[0] < K:
            raise ValueError(f"angle list has {t.shape[0]} entries, need {K}")
    if not math.isclose(t[0], math.pi / 4, rel_tol=0, abs_tol=1e-12):
        raise ValueError("t_1 must equal pi/4")
    if np.any(np.diff(t) <= 0):
        raise ValueError("angles must be strictly increasing")
    if np.any(t >= math.pi / 2):
        raise ValueError("angles must stay below pi/2")

    v = np.column_stack([np.cos(t), np.sin(t)])
    z = np.array([(-1.0) ** k for k in range(1, K + 1)])
    p = np.column_stack([v, z])
    g3, g2 = p, v
    if include_limit:
        g3 = np.vstack([p, [[0.0, 1.0, 1.0], [0.0, 1.0, -1.0]]])
        g2 = np.vstack([v, [[0.0, 1.0]]])
    sets3d = SetSystem([Segment([-2.0, 2.0, 1.0], [-2.0, 2.0, -1.0]),
                        Segment([2.0, 2.0, 1.0], [2.0, 2.0, -1.0]),
                        Hull(g3)])
    sets2d = SetSystem([Point(A), Point(B), Hull(g2)])
    return CounterexampleModel(K, t, v, p, sets3d, sets2d, include_limit)


def example1_system() -> SetSystem:
    """Two vertical segments and the unit cylinder."""
    from .convex_sets import Cylinder
    return SetSystem([Segment([-2.0, 2.0, 1.0], [-2.0, 2.0, -1.0]),
                      Segment([2.0, 2.0, 1.0], [2.0, 2.0, -1.0]),
                      Cylinder(1.0, 1.0)])


def path_point(model: CounterexampleModel, k: int, s: float) -> PathPoint:
    model._check_segment(k)
    if not 0.0 <= s <= 1.0:
        raise ValueError("path parameter must lie in [0, 1]")
    c = (1.0 - s) * model.v[k - 1] + s * model.v[k]
    z = (1.0 - s) * (-1.0) ** k + s * (-1.0) ** (k + 1)
    return PathPoint(k, float(s), c, float(z))


def project_xy(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return u[..., :2].copy()


def lift(model: CounterexampleModel, c: Union[PathPoint, Plateau]) -> np.ndarray:
    """Point of the zig-zag path above ``c``."""
    if isinstance(c, Plateau):
        return np.append(c.point, c.height)
    expected = path_point(model, c.k, c.s)
    if not np.allclose(expected.point, c.point, rtol=0, atol=1e-12):
        raise ValueError("point is not on the projected zig-zag path")
    return np.append(c.point, c.height)


def locate(model: CounterexampleModel, c2d, tol: float = 1e-10) -> PathPoint:
    """Find the path point of a 2D point lying on ``[v_k, v_{k+1}]``."""
    c2d = np.asarray(c2d, dtype=float)
    for k in range(1, model.K):
        p, q = model.v[k - 1], model.v[k]
        d = q - p
        s = float((c2d - p) @ d / (d @ d))
        if -tol <= s < 1.0 and np.linalg.norm(p + s * d - c2d) <= tol:
            return path_point(model, k, min(max(s, 0.0), 1.0))
    raise ValueError("point is not on the projected zig-zag path")


def _alpha_beta(c: np.ndarray, d: np.ndarray):
    return float((A - c) @ d), float((B - c) @ d)


def epsilon_of_contact(model: CounterexampleModel, c: PathPoint) -> float:
    """Relaxation parameter whose cycle has support ``(a, b, c)``.

    Raises:
        ValueError: if ``alpha <= 0`` or ``alpha + beta <= 0`` at ``c``,
            which can only happen for an invalid angle sequence.
    """
    d = model.direction(c.k)
    alpha, beta = _alpha_beta(np.asarray(c.point, dtype=float), d)
    if alpha <= 0 or alpha + beta <= 0:
        raise ValueError(f"degenerate contact geometry on segment {c.k}: "
                         f"alpha={alpha:.3g}, beta={beta:.3g}")
    return 1.0 + beta / alpha


def segment_epsilon_range(model: CounterexampleModel, k: int):
    """``(eps at v_k, limit of eps as c -> v_{k+1})`` along segment ``k``."""
    d = model.direction(k)
    a0, b0 = _alpha_beta(model.v[k - 1], d)
    a1, b1 = _alpha_beta(model.v[k], d)
    return 1.0 + b0 / a0, 1.0 + b1 / a1


def plateau_range(model: CounterexampleModel, k: int):
    """Closed epsilon interval on which the contact point sits at ``v_k``."""
    lo = segment_epsilon_range(model, k)[0] if k <= model.K - 1 else None
    hi = 1.0 if k == 1 else segment_epsilon_range(model, k - 1)[1]
    return lo, hi


def epsilon_reach(model: CounterexampleModel) -> float:
    """Smallest epsilon the truncated path accounts for."""
    return segment_epsilon_range(model, model.K - 1)[1]


def invert_epsilon(model: CounterexampleModel, epsilon: float,
                   iterations: int = 80) -> Union[PathPoint, Plateau]:
    """Contact point of the epsilon-cycle.

    Returns a :class:`PathPoint` when ``eps`` is attained by ``eps(c)`` on a
    segment, and a :class:`Plateau` when it falls into the jump at a vertex.

    Raises:
        EpsilonRangeError: if ``eps`` is below what ``K`` segments reach.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    for k in range(1, model.K):
        e0, e1 = segment_epsilon_range(model, k)
        if epsilon > e0:
            return Plateau(k, model.v[k - 1].copy(), model.vertex_height(k))
        if epsilon > e1:
            lo, hi = 0.0, 1.0  # eps(lo) >= epsilon > eps(hi)
            for _ in range(iterations):
                mid = 0.5 * (lo + hi)
                if epsilon_of_contact(model, path_point(model, k, mid)) >= epsilon:
                    lo = mid
                else:
                    hi = mid
            return path_point(model, k, lo)
    raise EpsilonRangeError(
        f"epsilon={epsilon:g} is below the reach {epsilon_reach(model):.4g} of K={model.K}; "
        "increase K")


def cycle_from_support_2d(epsilon: float, c2d) -> np.ndarray:
    return iterates_from_support(np.stack([A, B, np.asarray(c2d, dtype=float)]), epsilon)


def _lifted_cycle(model: CounterexampleModel, epsilon: float, c2d, z: float) -> EpsilonCycle:
    u2 = cycle_from_support_2d(epsilon, c2d)
    u = np.column_stack([u2, np.full(3, z)])
    return make_cycle(model.sets3d, u, epsilon)


def cycle_from_contact(model: CounterexampleModel, c: PathPoint) -> EpsilonCycle:
    """Closed-form 3D epsilon-cycle supported by ``(a, b, c)``, lifted to ``z(c)``."""
    eps = epsilon_of_contact(model, c)
    return _lifted_cycle(model, eps, c.point, c.height)


def predicted_cycle(model: CounterexampleModel, epsilon: float) -> EpsilonCycle:
    """Closed-form cycle for any reachable epsilon, plateaus included."""
    c = invert_epsilon(model, epsilon)
    return _lifted_cycle(model, epsilon, c.point, c.height)


def cycle_height(cycle: EpsilonCycle) -> float:
    return float(np.mean(np.concatenate([cycle.u[:, 2], cycle.w[:, 2]])))


def z_spread(cycle: EpsilonCycle) -> float:
    z = np.concatenate([cycle.u[:, 2], cycle.w[:, 2]])
    return float(z.max() - z.min())


@dataclass
class SweepPoint:
    epsilon: float
    cycle: Optional[EpsilonCycle]
    height: float
    contact: Optional[Union[PathPoint, Plateau]] = None
    error: Optional[str] = None


def _solve_one(args):
    model, eps, start, tol = args
    return solve_cycle(model.sets3d, start, eps, tol=tol)


def epsilon_sweep(model: CounterexampleModel, epsilons: Sequence[float], tol: float = 1e-11,
                  u_start=(0.0, 0.0, 0.0), warm_start: bool = True,
                  max_workers: Optional[int] = None) -> list:
    """Solve the 3D cycle for each epsilon and record its common height.

    With ``warm_start`` the grid is walked in the given order, each solve
    starting from the previous cycle; otherwise the points are independent
    and can be spread over ``max_workers`` processes. Solver failures are
    recorded on the point and the sweep continues.
    """
    out = []
    if warm_start or not max_workers or max_workers <= 1:
        start = np.asarray(u_start, dtype=float)
        for eps in epsilons:
            try:
                cyc = solve_cycle(model.sets3d, start, eps, tol=tol)
            except ConvergenceError as exc:
                log.warning("eps=%g: %s", eps, exc)
                out.append(SweepPoint(eps, None, float("nan"), error=str(exc)))
                continue
            if warm_start:
                start = cyc.u[-1]
            out.append(_sweep_point(model, eps, cyc))
        return out
    jobs = [(model, eps, np.asarray(u_start, dtype=float), tol) for eps in epsilons]
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(_solve_one, j) for j in jobs]
        for eps, fut in zip(epsilons, futures):
            try:
                out.append(_sweep_point(model, eps, fut.result()))
            except ConvergenceError as exc:
                out.append(SweepPoint(eps, None, float("nan"), error=str(exc)))
    return out


def _sweep_point(model, eps, cyc) -> SweepPoint:
    spread = z_spread(cyc)
    if spread > 1e-8:
        log.warning("eps=%g: cycle z-spread %.3e exceeds 1e-8", eps, spread)
    try:
        contact = invert_epsilon(model, eps)
    except EpsilonRangeError:
        contact = None
    return SweepPoint(eps, cyc, cycle_height(cyc), contact)


def contact_grid(model: CounterexampleModel, segments: Optional[Sequence[int]] = None,
                 params: Sequence[float] = (0.25, 0.75)) -> list:
    """Path points at the given parameters, in order of decreasing epsilon."""
    if segments is None:
        segments = range(1, model.K - 1)
    return [path_point(model, k, s) for k in segments for s in params]


def oscillation_witness(model: CounterexampleModel, heights: dict, tol: float = 1e-6) -> bool:
    """Check the alternating-height pattern on a quarter/three-quarter grid.

    ``heights`` maps ``(k, s)`` with ``s`` in ``{0.25, 0.75}`` to the cycle
    height. The witness holds when every height is ``+-0.5`` within ``tol``,
    the two heights on one segment have opposite signs and the sign at a
    fixed ``s`` flips from one segment to the next.
    """
    ks = sorted({k for k, _ in heights})
    if len(ks) < 2:
        return False
    for k in ks:
        for s in (0.25, 0.75):
            h = heights.get((k, s))
            if h is None or not abs(abs(h) - 0.5) <= tol:
                return False
        if np.sign(heights[(k, 0.25)]) == np.sign(heights[(k, 0.75)]):
            return False
    for k0, k1 in zip(ks, ks[1:]):
        if k1 != k0 + 1:
            return False
        for s in (0.25, 0.75):
            if np.sign(heights[(k0, s)]) == np.sign(heights[(k1, s)]):
                return False
    return True


def sign_changes(values: Sequence[float]) -> int:
    sg = np.sign(np.asarray(values, dtype=float))
    sg = sg[sg != 0]
    return int(np.sum(sg[1:] != sg[:-1]))


def sweep_to_csv(points: Sequence[SweepPoint]) -> str:
    """Columns: epsilon, contact kind/segment, s, height, nine cycle coordinates, residual, loops."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    coords = [f"u{i}{c}" for i in (1, 2, 3) for c in "xyz"]
    wr.writerow(["epsilon", "contact", "k", "s", "height", *coords, "residual", "loops"])
    for sp in points:
        if isinstance(sp.contact, PathPoint):
            kind, k, s = "segment", sp.contact.k, f"{sp.contact.s:.17g}"
        elif isinstance(sp.contact, Plateau):
            kind, k, s = "plateau", sp.contact.k, ""
        else:
            kind, k, s = "unknown", "", ""
        if sp.cycle is None:
            vals = [""] * 9 + ["", ""]
        else:
            vals = [f"{x:.17g}" for x in sp.cycle.u.reshape(-1)]
            vals += [f"{sp.cycle.residual:.17g}", sp.cycle.loops]
        wr.writerow([f"{sp.epsilon:.17g}", kind, k, s, f"{sp.height:.17g}", *vals])
    return buf.getvalue()


def model_to_text(model: CounterexampleModel) -> str:
    from .convex_sets import sets_to_text
    return sets_to_text(model.sets3d.sets)


def sweep_from_csv(text: str) -> list:
    """Parse :func:`sweep_to_csv` output into one dict per row."""
    out = []
    for r in csv.DictReader(io.StringIO(text)):
        coords = [r[f"u{i}{c}"] for i in (1, 2, 3) for c in "xyz"]
        out.append({
            "epsilon": float(r["epsilon"]),
            "contact": r["contact"],
            "k": int(r["k"]) if r["k"] else None,
            "s": float(r["s"]) if r["s"] else None,
            "height": float(r["height"]),
            "u": np.array([float(x) for x in coords]).reshape(3, 3) if coords[0] else None,
            "residual": float(r["residual"]) if r["residual"] else None,
            "loops": int(r["loops"]) if r["loops"] else None,
        })
    return out
