"""Closed convex sets with exact or certified projection operators.

Four kinds of set are supported: a single point, a line segment, an
axis-aligned solid cylinder (3D only) and the convex hull of a finite list of
generators. Every projection comes with a certificate: the largest value of
``<v - w, u - w>`` over the extreme points ``v`` of the set, which is ``<= 0``
exactly when ``w`` is the nearest point to ``u``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

MEMBERSHIP_TOL = 1e-9


class ProjectionError(RuntimeError):
    """Raised when an iterative projection fails to certify its output."""

    def __init__(self, message: str, certificate_violation: float = float("nan")):
        super().__init__(message)
        self.certificate_violation = certificate_violation


def as_vec(u, dim: Optional[int] = None) -> np.ndarray:
    v = np.asarray(u, dtype=float).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"expected a vector of dimension {dim}, got {v.shape[0]}")
    if not np.isfinite(v).all():
        raise ValueError("vector has non-finite coordinates")
    return v


def projection_tolerance(u) -> float:
    """Certificate tolerance ``1e-10 * (1 + |u|^2)``."""
    u = np.asarray(u, dtype=float)
    return 1e-10 * (1.0 + float(u @ u))


@dataclass(frozen=True)
class ProjectionResult:
    point: np.ndarray
    certificate_violation: float
    # face of the set containing the point: generator indices for hulls and
    # segments, clamp flags for cylinders
    active: tuple = ()


@dataclass(frozen=True, eq=False)
class Point:
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", as_vec(self.p))

    @property
    def dim(self) -> int:
        return self.p.shape[0]

    def project(self, u) -> ProjectionResult:
        u = as_vec(u, self.dim)
        return ProjectionResult(self.p.copy(), 0.0)

    def jacobian(self, u, result: ProjectionResult) -> np.ndarray:
        return np.zeros((self.dim, self.dim))

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        return bool(np.linalg.norm(as_vec(x, self.dim) - self.p) <= tol)

    def extreme_points(self) -> np.ndarray:
        return self.p[None, :]


@dataclass(frozen=True, eq=False)
class Segment:
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p, q = as_vec(self.p), as_vec(self.q)
        if p.shape != q.shape:
            raise ValueError("segment endpoints have different dimensions")
        if np.array_equal(p, q):
            raise ValueError("segment endpoints must be distinct")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def dim(self) -> int:
        return self.p.shape[0]

    @property
    def _axis(self) -> Optional[int]:
        # index of the only varying coordinate, if the segment is axis-aligned
        diff = np.flatnonzero(self.p != self.q)
        return int(diff[0]) if diff.size == 1 else None

    def _param(self, u: np.ndarray) -> float:
        d = self.q - self.p
        return float((u - self.p) @ d / (d @ d))

    def project(self, u) -> ProjectionResult:
        u = as_vec(u, self.dim)
        axis = self._axis
        t = self._param(u)
        if axis is not None:
            # coordinate clamp keeps the free coordinate bit-exact
            w = self.p.copy()
            lo, hi = sorted((self.p[axis], self.q[axis]))
            w[axis] = min(max(u[axis], lo), hi)
        else:
            w = self.p + min(max(t, 0.0), 1.0) * (self.q - self.p)
        face = (0,) if t <= 0.0 else (1,) if t >= 1.0 else (0, 1)
        g = u - w
        viol = max(float((self.p - w) @ g), float((self.q - w) @ g), 0.0)
        return ProjectionResult(w, viol, face)

    def jacobian(self, u, result: ProjectionResult) -> np.ndarray:
        t = self._param(as_vec(u, self.dim))
        if t <= 0.0 or t >= 1.0:
            return np.zeros((self.dim, self.dim))
        d = (self.q - self.p) / np.linalg.norm(self.q - self.p)
        return np.outer(d, d)

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = as_vec(x, self.dim)
        t = min(max(self._param(x), 0.0), 1.0)
        return bool(np.linalg.norm(self.p + t * (self.q - self.p) - x) <= tol)

    def extreme_points(self) -> np.ndarray:
        return np.stack([self.p, self.q])


@dataclass(frozen=True, eq=False)
class Cylinder:
    """Solid cylinder ``x^2 + y^2 <= r^2, |z| <= h`` around the z-axis."""

    radius: float = 1.0
    half_height: float = 1.0

    def __post_init__(self):
        if not (self.radius > 0 and self.half_height > 0):
            raise ValueError("cylinder radius and half-height must be positive")

    dim = 3

    def project(self, u) -> ProjectionResult:
        u = as_vec(u, 3)
        w = u.copy()
        rho = np.hypot(u[0], u[1])
        if rho > self.radius:
            w[:2] = u[:2] * (self.radius / rho)
        w[2] = min(max(u[2], -self.half_height), self.half_height)
        face = (int(rho > self.radius), int(np.sign(u[2] - w[2])))
        return ProjectionResult(w, max(verify_projection(self, u, w), 0.0), face)

    def jacobian(self, u, result: ProjectionResult) -> np.ndarray:
        u = as_vec(u, 3)
        J = np.zeros((3, 3))
        rho = np.hypot(u[0], u[1])
        if rho > self.radius:
            n = u[:2] / rho
            J[:2, :2] = (self.radius / rho) * (np.eye(2) - np.outer(n, n))
        else:
            J[:2, :2] = np.eye(2)
        if abs(u[2]) < self.half_height:
            J[2, 2] = 1.0
        return J

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = as_vec(x, 3)
        return bool(np.hypot(x[0], x[1]) <= self.radius + tol
                    and abs(x[2]) <= self.half_height + tol)

    def rim_points(self, n: int = 720) -> np.ndarray:
        theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        ring = np.stack([self.radius * np.cos(theta), self.radius * np.sin(theta)], axis=1)
        top = np.column_stack([ring, np.full(n, self.half_height)])
        bottom = np.column_stack([ring, np.full(n, -self.half_height)])
        return np.vstack([top, bottom])


@dataclass(frozen=True, eq=False)
class Hull:
    """Convex hull of a finite, ordered list of generators."""

    generators: np.ndarray
    tol: Optional[float] = None
    max_iter: int = 1000

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.generators, dtype=float))
        if G.shape[0] == 0:
            raise ValueError("hull needs at least one generator")
        if not np.all(np.isfinite(G)):
            raise ValueError("hull generators must be finite")
        G.setflags(write=False)
        object.__setattr__(self, "generators", G)

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    def project(self, u) -> ProjectionResult:
        u = as_vec(u, self.dim)
        tol = self.tol if self.tol is not None else projection_tolerance(u)
        return project_hull_nearest_point(self.generators, u, tol, max_iter=self.max_iter)

    def jacobian(self, u, result: ProjectionResult) -> np.ndarray:
        act = self.generators[list(result.active)]
        if len(act) <= 1:
            return np.zeros((self.dim, self.dim))
        B = act[1:] - act[0]
        _, s, vt = np.linalg.svd(B, full_matrices=False)
        rank = int(np.sum(s > 1e-12 * max(s[0], 1.0)))
        V = vt[:rank]
        return V.T @ V

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = as_vec(x, self.dim)
        w = project_hull_nearest_point(self.generators, x, projection_tolerance(x)).point
        return bool(np.linalg.norm(w - x) <= tol)

    def extreme_points(self) -> np.ndarray:
        """The generators: a superset of the extreme points, enough for certificates."""
        return self.generators


ConvexSet = Union[Point, Segment, Cylinder, Hull]


def project(cset: ConvexSet, u) -> ProjectionResult:
    """Nearest point of ``cset`` to ``u`` together with its certificate."""
    return cset.project(u)


def _affine_min_norm(Q: np.ndarray) -> np.ndarray:
    # barycentric weights of the min-norm point of the affine hull of the rows of Q
    n = len(Q)
    if n == 1:
        return np.ones(1)
    if n == 2:
        d = Q[1] - Q[0]
        t = -float(Q[0] @ d) / float(d @ d)
        return np.array([1.0 - t, t])
    M = Q @ Q.T + 1.0
    try:
        mu = np.linalg.solve(M, np.ones(n))
        mu = mu / mu.sum()
        if np.isfinite(mu).all():
            return mu
    except np.linalg.LinAlgError:
        pass
    B = (Q[1:] - Q[0]).T
    nu = np.linalg.lstsq(B, -Q[0], rcond=None)[0]
    return np.concatenate([[1.0 - nu.sum()], nu])


def project_hull_nearest_point(generators, u, tol: float, max_iter: int = 1000) -> ProjectionResult:
    """Project ``u`` onto the convex hull of ``generators`` (Wolfe's method).

    Wolfe's active-set algorithm is run on the shifted points ``v_j - u``
    until no generator improves the current point. The returned
    ``certificate_violation`` is ``max_j <v_j - w, u - w>``, clipped at 0.

    Args:
        generators: array of shape ``(n, d)``.
        u: point of dimension ``d``.
        tol: largest certificate violation accepted.
        max_iter: cap on major iterations.

    Raises:
        ProjectionError: if the cap is hit before the certificate is within ``tol``.
    """
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    u = as_vec(u, G.shape[1])
    if tol <= 0:
        raise ValueError("tol must be positive")
    P = G - u
    sq = np.einsum("ij,ij->i", P, P)
    scale = max(float(sq.max()), 1e-300)
    # internal stopping threshold, far below tol so the final face is exact
    inner_tol = 1e-15 * scale

    S = [int(np.argmin(sq))]
    lam = np.ones(1)
    x = P[S[0]].copy()
    best_gap = np.inf
    for _ in range(max_iter):
        dots = P @ x
        j = int(np.argmin(dots))
        gap = float(x @ x - dots[j])
        best_gap = min(best_gap, gap)
        if gap <= inner_tol or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            mu = _affine_min_norm(P[S])
            if np.all(mu > 1e-14):
                lam = mu
                break
            neg = mu <= 1e-14
            denom = lam[neg] - mu[neg]
            ratios = np.where(denom > 0, lam[neg] / np.where(denom > 0, denom, 1.0), 0.0)
            theta = float(np.clip(ratios.min(), 0.0, 1.0))
            lam = lam + theta * (mu - lam)
            drop = np.flatnonzero(neg)[np.argmin(ratios)]
            keep = lam > 1e-14
            keep[drop] = False
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
        x_new = lam @ P[S]
        if x_new @ x_new >= x @ x and gap <= tol:
            break
        x = x_new
    else:
        w = u + x
        viol = max(float(np.max((G - w) @ (u - w))), 0.0)
        if viol > tol:
            raise ProjectionError(
                f"hull projection hit {max_iter} iterations (violation {viol:.3e})", viol)

    w = u + lam @ P[S]
    viol = max(float(np.max((G - w) @ (u - w))), 0.0)
    if viol > tol:
        raise ProjectionError(f"hull projection not certified (violation {viol:.3e} > {tol:.3e})",
                              viol)
    order = np.argsort(S)
    return ProjectionResult(w, viol, tuple(int(S[i]) for i in order))


def verify_projection(cset: ConvexSet, u, w) -> float:
    """Largest ``<v - w, u - w>`` over the extreme points of ``cset``.

    A value ``<= 0`` (up to rounding) certifies ``w`` as the projection of
    ``u``, provided ``w`` lies in the set. For a cylinder the extreme points
    are its two rim circles, over which the maximum has a closed form.
    """
    u = as_vec(u, cset.dim)
    w = as_vec(w, cset.dim)
    g = u - w
    if isinstance(cset, Cylinder):
        # sup over the rims of <v, g> is r|g_xy| + h|g_z|
        sup = cset.radius * np.hypot(g[0], g[1]) + cset.half_height * abs(g[2])
        return float(sup - w @ g)
    V = cset.extreme_points()
    return float(np.max((V - w) @ g))


def contains(cset: ConvexSet, x, tol: float = MEMBERSHIP_TOL) -> bool:
    return cset.contains(x, tol)


# --- plain-text key/value serialization -----------------------------------

def _fmt(v: np.ndarray) -> str:
    return " ".join(format(float(c), ".17g") for c in v)


def set_to_text(cset: ConvexSet) -> str:
    lines = ["[set]"]
    if isinstance(cset, Point):
        lines += ["kind = point", f"dim = {cset.dim}", f"p = {_fmt(cset.p)}"]
    elif isinstance(cset, Segment):
        lines += ["kind = segment", f"dim = {cset.dim}",
                  f"p = {_fmt(cset.p)}", f"q = {_fmt(cset.q)}"]
    elif isinstance(cset, Cylinder):
        lines += ["kind = cylinder", "dim = 3",
                  f"radius = {cset.radius:.17g}", f"half_height = {cset.half_height:.17g}"]
    elif isinstance(cset, Hull):
        lines += ["kind = hull", f"dim = {cset.dim}"]
        lines += [f"generator = {_fmt(g)}" for g in cset.generators]
    else:
        raise TypeError(f"cannot serialize {type(cset).__name__}")
    return "\n".join(lines) + "\n"


def sets_to_text(sets: Sequence[ConvexSet]) -> str:
    return "\n".join(set_to_text(s) for s in sets)


def _parse_block(pairs: list) -> ConvexSet:
    kv = {}
    gens = []
    for key, val in pairs:
        if key == "generator":
            gens.append([float(t) for t in val.split()])
        else:
            kv[key] = val
    kind = kv.get("kind")
    dim = int(kv["dim"]) if "dim" in kv else None

    def vec(key):
        return as_vec([float(t) for t in kv[key].split()], dim)

    if kind == "point":
        return Point(vec("p"))
    if kind == "segment":
        return Segment(vec("p"), vec("q"))
    if kind == "cylinder":
        return Cylinder(float(kv["radius"]), float(kv["half_height"]))
    if kind == "hull":
        G = np.array(gens, dtype=float)
        if dim is not None and G.shape[1] != dim:
            raise ValueError("generator dimension does not match dim")
        return Hull(G)
    raise ValueError(f"unknown set kind {kind!r}")


def sets_from_text(text: str) -> list:
    """Parse one or more ``[set]`` blocks written by :func:`sets_to_text`."""
    blocks, cur = [], None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[set]":
            cur = []
            blocks.append(cur)
            continue
        if cur is None:
            raise ValueError("key/value line outside a [set] block")
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"malformed line: {raw!r}")
        cur.append((key.strip(), val.strip()))
    return [_parse_block(b) for b in blocks]


def set_from_text(text: str) -> ConvexSet:
    sets = sets_from_text(text)
    if len(sets) != 1:
        raise ValueError(f"expected one set, found {len(sets)}")
    return sets[0]
