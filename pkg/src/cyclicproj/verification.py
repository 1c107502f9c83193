"""Independent oracles and a seeded property suite.

The oracles here deliberately avoid the code paths they check: the hull
projection is re-solved as a QP over simplex weights by accelerated
projected gradient, and the cycle-from-support closed form is re-derived by
substitution in the linear cycle equations.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import convex_sets as cs
from . import counterexample as cx
from . import engine as en


@dataclass
class OracleReport:
    name: str
    max_error: float
    tolerance: float
    samples: int
    details: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)

    def to_record(self) -> str:
        return json.dumps({"name": self.name, "max_error": self.max_error,
                           "tolerance": self.tolerance, "samples": self.samples,
                           "pass": self.passed})


def project_to_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum x = 1}`` (sort based)."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(y) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def qp_projection_oracle(generators, u, tol: float = 1e-12, max_iter: int = 200_000) -> np.ndarray:
    """Nearest point of ``co(generators)`` to ``u`` via simplex-weight QP.

    Minimizes ``|G^T lam - u|^2`` over the simplex with FISTA and gradient
    restarts, stopping when the Frank-Wolfe gap in weight space drops below
    ``tol`` (relative to the problem scale).
    """
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    u = np.asarray(u, dtype=float)
    n = len(G)
    if n == 1:
        return G[0].copy()
    if n > 64:
        raise ValueError("oracle is meant for at most 64 generators")
    Q = G @ G.T
    c = G @ u
    L = max(np.linalg.eigvalsh(Q)[-1], 1e-300)
    scale = max(float(np.max(np.sum((G - u) ** 2, axis=1))), 1e-300)
    lam = np.full(n, 1.0 / n)
    y = lam.copy()
    t = 1.0
    for _ in range(max_iter):
        grad_y = Q @ y - c
        lam_new = project_to_simplex(y - grad_y / L)
        grad = Q @ lam_new - c
        gap = float(grad @ lam_new - grad.min())
        if gap <= tol * scale:
            lam = lam_new
            break
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if (grad_y @ (lam_new - lam)) > 0:
            # restart momentum when it points uphill
            y, t_new = lam_new.copy(), 1.0
        else:
            y = lam_new + ((t - 1.0) / t_new) * (lam_new - lam)
        lam, t = lam_new, t_new
    return lam @ G


def linear_cycle_oracle(w, epsilon: float) -> np.ndarray:
    """Solve ``u_i = (1-eps) u_{i-1} + eps w_i`` (3 sets) by substitution."""
    w1, w2, w3 = np.asarray(w, dtype=float)
    q = 1.0 - epsilon
    # u3 = q^3 u3 + eps (q^2 w1 + q w2 + w3)
    u3 = epsilon * (q * q * w1 + q * w2 + w3) / (1.0 - q ** 3)
    u1 = q * u3 + epsilon * w1
    u2 = q * u1 + epsilon * w2
    return np.stack([u1, u2, u3])


# --- property checks -------------------------------------------------------

def _random_sets(rng: np.random.Generator) -> dict:
    hull2 = cs.Hull(rng.normal(size=(12, 2)))
    hull3 = cs.Hull(rng.normal(size=(15, 3)))
    return {
        "point": cs.Point(rng.normal(size=3)),
        "segment": cs.Segment(rng.normal(size=3), rng.normal(size=3)),
        "axis_segment": cs.Segment([-2.0, 2.0, 1.0], [-2.0, 2.0, -1.0]),
        "cylinder": cs.Cylinder(1.0, 1.0),
        "hull2d": hull2,
        "hull3d": hull3,
    }


def check_projections(rng: np.random.Generator, n: int = 1000) -> List[OracleReport]:
    reports = []
    for kind, S in _random_sets(rng).items():
        d = S.dim
        U = rng.normal(scale=3.0, size=(n, d))
        V = rng.normal(scale=3.0, size=(n, d))
        nonexp = idem = member = cert = 0.0
        for u, v in zip(U, V):
            pu = S.project(u)
            pv = S.project(v)
            nonexp = max(nonexp, np.linalg.norm(pu.point - pv.point) - np.linalg.norm(u - v))
            idem = max(idem, float(np.linalg.norm(S.project(pu.point).point - pu.point)))
            if not S.contains(pu.point, cs.MEMBERSHIP_TOL):
                member = max(member, 1.0)
            cert = max(cert, cs.verify_projection(S, u, pu.point) / cs.projection_tolerance(u))
        reports += [
            OracleReport(f"nonexpansive[{kind}]", max(nonexp, 0.0), 1e-9, n),
            OracleReport(f"idempotent[{kind}]", idem, 1e-9, n),
            OracleReport(f"membership[{kind}]", member, 0.0, n),
            # certificate measured in units of the scaled tolerance
            OracleReport(f"certificate[{kind}]", max(cert, 0.0), 1.0, n),
        ]
    return reports


def check_hull_vs_oracle(rng: np.random.Generator, instances: int = 100,
                         tol: float = 1e-7) -> OracleReport:
    worst, details = 0.0, []
    for _ in range(instances):
        n = int(rng.integers(1, 51))
        G = rng.normal(size=(n, 2))
        u = rng.normal(scale=2.0, size=2)
        w = cs.project_hull_nearest_point(G, u, cs.projection_tolerance(u)).point
        err = float(np.linalg.norm(w - qp_projection_oracle(G, u)))
        if err > worst:
            worst, details = err, [{"n": n, "u": u.tolist()}]
    return OracleReport("hull_vs_qp_oracle", worst, tol, instances, details)


def check_support_algebra(rng: np.random.Generator, n: int = 1000) -> List[OracleReport]:
    err = 0.0
    for _ in range(n):
        w = rng.normal(size=(3, 3))
        eps = float(rng.uniform(1e-3, 1.0))
        err = max(err, float(np.abs(en.iterates_from_support(w, eps)
                                    - linear_cycle_oracle(w, eps)).max()))
    grid = np.linspace(1e-6, 1 - 1e-6, 10_001)
    # number of grid points where eps^2 - 3 eps + 3 > 1 fails
    bad = int(np.sum(grid ** 2 - 3 * grid + 3 <= 1.0))
    return [OracleReport("closed_form_vs_linear_oracle", err, 1e-12, n),
            OracleReport("contraction_factor", float(bad), 0.0, len(grid))]


def check_uniqueness(rng: np.random.Generator, K: int = 40,
                     epsilons=(0.9, 0.5, 0.2, 0.05), starts: int = 5) -> List[OracleReport]:
    model = cx.build_model(K)
    spread = zspread = res2d = consist = 0.0
    for eps in epsilons:
        cycles = [en.solve_cycle(model.sets3d, rng.uniform(-10, 10, 3), eps, tol=1e-11)
                  for _ in range(starts)]
        ref = cycles[0].u
        for c in cycles:
            spread = max(spread, float(np.abs(c.u - ref).max()))
            zspread = max(zspread, cx.z_spread(c))
            res2d = max(res2d, en.cycle_residual(model.sets2d, c.u[:, :2], eps))
            back = en.iterates_from_support(en.support_of(model.sets3d, c.u), eps)
            consist = max(consist, float(np.abs(back - c.u).max()))
    n = len(epsilons) * starts
    return [OracleReport("cycle_start_independence", spread, 1e-7, n),
            OracleReport("dimension_reduction_zspread", zspread, 1e-8, n),
            OracleReport("dimension_reduction_2d_residual", res2d, 1e-8, n),
            OracleReport("support_consistency", consist, 1e-8, n)]


def check_fejer_objective(rng: np.random.Generator, loops: int = 200) -> OracleReport:
    """Per-loop least-squares objective along a small constant step on feasible systems."""
    worst = 0.0
    systems = [
        en.SetSystem([cs.Segment([-1.0, 0.0], [1.0, 0.0]), cs.Segment([0.0, -1.0], [0.0, 1.0])]),
        en.SetSystem([cs.Hull(rng.normal(size=(6, 2)) + 0.5), cs.Point([0.5, 0.5]),
                      cs.Segment([0.5, -1.0], [0.5, 2.0])]),
        en.SetSystem([cs.Cylinder(1.0, 1.0), cs.Segment([0.0, 0.0, -3.0], [0.0, 0.0, 3.0]),
                      cs.Hull(np.vstack([rng.normal(size=(5, 3)), np.zeros((1, 3))]))]),
    ]
    for sys_ in systems:
        for eps in (0.01, 0.05):
            u = rng.normal(scale=4.0, size=sys_.dim)
            f = en.least_squares_objective(sys_, u)
            for _ in range(loops):
                u, _ = en.sweep(sys_, u, eps)
                f_new = en.least_squares_objective(sys_, u)
                worst = max(worst, f_new - f)
                f = f_new
    return OracleReport("objective_nonincreasing_per_loop", worst, 1e-12, len(systems) * 2 * loops)


def check_gradient(rng: np.random.Generator, n: int = 100, h: float = 1e-5) -> OracleReport:
    systems = [cx.example1_system(), cx.build_model(12).sets3d]
    worst, used = 0.0, 0
    while used < n:
        sys_ = systems[used % 2]
        u = rng.normal(scale=2.0, size=3)
        faces = [s.project(u).active for s in sys_.sets]
        stencil = [u + h * s * e for e in np.eye(3) for s in (1, -1)]
        if any([S.project(p).active for S in sys_.sets] != faces for p in stencil):
            continue  # stencil straddles a kink of some projection
        g = en.least_squares_gradient(sys_, u)
        fd = np.array([(en.least_squares_objective(sys_, u + h * e)
                        - en.least_squares_objective(sys_, u - h * e)) / (2 * h) for e in np.eye(3)])
        worst = max(worst, float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1.0)))
        used += 1
    return OracleReport("gradient_vs_finite_differences", worst, 1e-5, n)


def check_formula_vs_iteration(rng: np.random.Generator, K: int = 12, samples: int = 50,
                               segments=range(1, 11)) -> OracleReport:
    model = cx.build_model(K)
    segs = list(segments)
    pts = sorted(((int(rng.choice(segs)), float(rng.uniform(0.0, 1.0))) for _ in range(samples)))
    worst = 0.0
    start = np.zeros(3)
    for k, s in pts:
        c = cx.path_point(model, k, s)
        ref = cx.cycle_from_contact(model, c)
        cyc = en.solve_cycle(model.sets3d, start, ref.epsilon, tol=1e-11)
        start = cyc.u[-1]
        worst = max(worst, float(np.abs(cyc.u - ref.u).max()))
    return OracleReport("closed_form_vs_iteration", worst, 1e-7, samples)


def check_epsilon_monotone(eps_fn: Optional[Callable] = None, K: int = 12,
                           points: int = 1000) -> OracleReport:
    """Strict decrease of eps(c) along the path, with downward jumps at vertices.

    ``max_error`` counts the steps along the grid that fail to decrease.
    """
    model = cx.build_model(K)
    eps_fn = eps_fn or (lambda c: cx.epsilon_of_contact(model, c))
    per = points // (K - 1)
    bad = 0
    prev_end = None
    for k in range(1, K):
        vals = np.array([eps_fn(cx.path_point(model, k, s))
                         for s in np.linspace(0.0, 1.0, per, endpoint=False)])
        # the limit at v_{k+1} from inside segment k closes the segment
        end = eps_fn(cx.path_point(model, k, 1.0))
        bad += int(np.sum(np.diff(np.append(vals, end)) >= 0))
        if prev_end is not None and not vals[0] < prev_end:
            bad += 1  # no downward jump at v_k
        prev_end = end
    return OracleReport("epsilon_strictly_decreasing", float(bad), 0.0, per * (K - 1))


def check_oscillation(K: int = 12) -> OracleReport:
    model = cx.build_model(K)
    grid = cx.contact_grid(model, range(1, K - 1))
    sweep = cx.epsilon_sweep(model, [cx.epsilon_of_contact(model, c) for c in grid], tol=1e-11)
    heights = {(c.k, c.s): sp.height for c, sp in zip(grid, sweep)}
    err = max(abs(abs(h) - 0.5) for h in heights.values())
    ok = cx.oscillation_witness(model, heights, tol=1e-6)
    return OracleReport("oscillation_witness", err if ok else float("inf"), 1e-6, len(grid))


def check_omega_limit(K: int = 40) -> List[OracleReport]:
    model = cx.build_model(K)
    eps_grid = np.geomspace(0.5, 1.05 * cx.epsilon_reach(model), 12)
    sweep = cx.epsilon_sweep(model, eps_grid, tol=1e-11)
    target = np.array([0.0, 5.0 / 3.0])
    diam_ratio = max(sp.cycle.diameter / sp.epsilon for sp in sweep)
    xy_ratio = max(float(np.linalg.norm(sp.cycle.u[:, :2] - target, axis=1).max()) / sp.epsilon
                   for sp in sweep)
    shrink = sweep[-1].cycle.diameter / sweep[0].cycle.diameter
    return [OracleReport("omega_limit_diameter_over_eps", diam_ratio, 10.0, len(sweep)),
            OracleReport("omega_limit_xy_over_eps", xy_ratio, 10.0, len(sweep)),
            OracleReport("omega_limit_shrink_ratio", shrink, 0.2, len(sweep))]


def check_directions(K: int = 40) -> List[OracleReport]:
    model = cx.build_model(K)
    dist = np.array([np.linalg.norm(model.direction(k) - np.array([-1.0, 0.0]))
                     for k in range(1, K)])
    increase = float(np.max(np.diff(dist)))
    return [OracleReport("direction_distance_decreasing", max(increase, 0.0), 0.0, K - 1),
            OracleReport("direction_limit", float(dist[-1]), 0.1, 1)]


def check_extreme_points(K: int = 40) -> OracleReport:
    """Each ``v_k`` is strictly outside the hull of the others, with certificate."""
    model = cx.build_model(K, include_limit=False)
    bad = 0
    for k in range(K):
        others = np.delete(model.v, k, axis=0)
        res = cs.project_hull_nearest_point(others, model.v[k], 1e-14)
        if not np.linalg.norm(res.point - model.v[k]) > 0:
            bad += 1
    return OracleReport("vertices_extreme", float(bad), 0.0, K)


def check_plane_invariance(rng: np.random.Generator, starts: int = 20, loops: int = 50) -> OracleReport:
    system = cx.example1_system()
    worst = 0.0
    for _ in range(starts):
        u0 = np.append(rng.uniform(-5, 5, 2), rng.uniform(-1, 1))
        for eps in (0.25, 0.5, 0.75):
            u = u0
            for _ in range(loops):
                u, its = en.sweep(system, u, eps)
                worst = max(worst, float(np.abs(its[:, 2] - u0[2]).max()))
    return OracleReport("example1_plane_invariance", worst, 0.0, starts * 3)


def check_least_squares(rng: np.random.Generator, starts: int = 10) -> List[OracleReport]:
    worst = 0.0
    for system in (cx.example1_system(), cx.build_model(40).sets3d):
        for _ in range(starts):
            u = en.solve_least_squares(system, rng.uniform(-10, 10, 3), tol=1e-12)
            worst = max(worst, abs(u[0]), abs(u[1] - 5.0 / 3.0))
    g = max(float(np.linalg.norm(en.least_squares_gradient(s, [0.0, 5.0 / 3.0, 0.0])))
            for s in (cx.example1_system(), cx.build_model(40).sets3d))
    return [OracleReport("least_squares_solution_set", worst, 1e-6, 2 * starts),
            OracleReport("least_squares_gradient_at_solution", g, 1e-12, 2)]


MUTATIONS = ("epsilon-formula",)


def run_property_suite(seed: int = 0, mutate: Optional[str] = None) -> List[OracleReport]:
    """Run every property check with a deterministic seed.

    Args:
        seed: seed for all random sampling.
        mutate: name of a deliberate defect to inject (``"epsilon-formula"``
            perturbs the closed form ``eps(c)``), used to confirm the suite
            can fail.
    """
    if mutate is not None and mutate not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutate!r}; choose from {MUTATIONS}")
    rng = np.random.default_rng(seed)
    reports: List[OracleReport] = []
    reports += check_projections(rng)
    reports.append(check_hull_vs_oracle(rng))
    reports += check_support_algebra(rng)
    reports += check_uniqueness(rng)
    reports.append(check_fejer_objective(rng))
    reports.append(check_gradient(rng))
    reports.append(check_formula_vs_iteration(rng))

    eps_fn = None
    if mutate == "epsilon-formula":
        model = cx.build_model(12)
        eps_fn = lambda c: cx.epsilon_of_contact(model, c) + 0.2 * c.s  # noqa: E731
    reports.append(check_epsilon_monotone(eps_fn))
    reports.append(check_oscillation())
    reports += check_omega_limit()
    reports += check_directions()
    reports.append(check_extreme_points())
    reports.append(check_plane_invariance(rng))
    reports += check_least_squares(rng)
    return reports
