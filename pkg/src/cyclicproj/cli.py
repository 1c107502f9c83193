"""Command-line harness: each subcommand writes CSV and SVG output.

Subcommands:

    example1               under-relaxed trajectories for two segments and a cylinder
    counterexample-sweep   cycle heights over a range of epsilon (exit 0 iff they oscillate)
    epsilon-of-contact     closed-form eps(c) along the zig-zag path, or its inverse
    lambda-run             cyclic projections with a step-size schedule
    least-squares          averaged projections to a least-squares point
    verify                 property suite against independent oracles (exit 0 iff all pass)
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import counterexample as ce
from . import engine
from .svg import Figure
from .verification import MUTATIONS, run_property_suite

log = logging.getLogger("cyclicproj")

SET_COLORS = ("#c0392b", "#2471a3", "#4a6a8a")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    K: int = 40
    epsilons: List[float] = field(default_factory=list)
    schedule: Optional[list] = None
    starts: List[np.ndarray] = field(default_factory=list)
    tol: float = 1e-11
    max_loops: int = 200
    out_csv: Optional[str] = None
    out_svg: Optional[str] = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ConfigError("--tol must be positive")
        if self.max_loops < 1:
            raise ConfigError("--max-loops must be at least 1")
        for e in self.epsilons:
            if not 0 < e <= 1:
                raise ConfigError(f"epsilon {e:g} outside (0, 1]")


# --- argument parsing -------------------------------------------------------

def parse_vector(text: str, dim: int = 3) -> np.ndarray:
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise ConfigError(f"cannot parse vector {text!r}") from None
    if v.shape != (dim,) or not np.isfinite(v).all():
        raise ConfigError(f"expected {dim} finite comma-separated numbers, got {text!r}")
    return v


def parse_schedule(text: str) -> list:
    """Parse a step-size schedule into ``(lambda, count, unit)`` pieces.

    Tokens are comma separated. A bare number is a single step; the token
    ``const:EPS:N`` holds ``EPS`` for ``N`` full loops.
    """
    pieces = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        try:
            if tok.startswith("const:"):
                _, eps, n = tok.split(":")
                piece = (float(eps), int(n), "loops")
            else:
                piece = (float(tok), 1, "steps")
        except ValueError:
            raise ConfigError(f"bad schedule token {tok!r}") from None
        if not 0 < piece[0] <= 1 or piece[1] < 1:
            raise ConfigError(f"schedule token {tok!r} needs a step in (0, 1] and a positive count")
        pieces.append(piece)
    if not pieces:
        raise ConfigError("empty schedule")
    return pieces


def expand_schedule(pieces: list, m: int):
    for lam, n, unit in pieces:
        count = n * m if unit == "loops" else n
        for _ in range(count):
            yield lam


def epsilon_grid(args) -> List[float]:
    if args.epsilon:
        return list(args.epsilon)
    if args.eps_min is None and args.eps_max is None:
        return []
    if args.eps_min is None or args.eps_max is None:
        raise ConfigError("--eps-min and --eps-max go together")
    if not 0 < args.eps_min <= args.eps_max <= 1:
        raise ConfigError("need 0 < eps-min <= eps-max <= 1")
    if args.eps_steps < 1:
        raise ConfigError("--eps-steps must be at least 1")
    return list(np.geomspace(args.eps_max, args.eps_min, args.eps_steps))


def load_model(args) -> ce.CounterexampleModel:
    rule = None
    if args.angle_rule != "default":
        try:
            rule = np.atleast_1d(np.loadtxt(args.angle_rule, dtype=float))
        except OSError as exc:
            raise ConfigError(f"cannot read angle file: {exc}") from None
    return ce.build_model(args.K, rule)


# --- plotting helpers -----------------------------------------------------

def _draw_sets_xy(fig: Figure, system: engine.SetSystem):
    from .convex_sets import Cylinder, Hull, Point, Segment
    for cset, color in zip(system.sets, SET_COLORS):
        if isinstance(cset, Cylinder):
            fig.circle((0.0, 0.0), cset.radius, fill="#dde6f0", stroke=color)
        elif isinstance(cset, Hull):
            g = np.unique(np.round(cset.generators[:, :2], 12), axis=0)
            fig.polygon(_convex_polygon(g), stroke=color)
        elif isinstance(cset, Segment):
            fig.markers(np.stack([cset.p, cset.q]), fill=color, size=5)
        elif isinstance(cset, Point):
            fig.markers(np.atleast_2d(cset.p), fill=color, size=5)


def _convex_polygon(pts: np.ndarray) -> np.ndarray:
    """Vertices of the 2D convex hull in counter-clockwise order (monotone chain)."""
    pts = sorted(map(tuple, pts))
    if len(pts) < 3:
        return np.array(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _write(path: Optional[str], text: str):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# --- subcommands ----------------------------------------------------------

def cmd_example1(args) -> int:
    eps = args.epsilon[0] if args.epsilon else 0.5
    starts = [parse_vector(s) for s in args.start] or [np.array([3.0, -1.0, 0.3]),
                                                       np.array([-3.0, 0.5, -0.6])]
    cfg = RunConfig("example1", epsilons=[eps], starts=starts, max_loops=args.max_loops,
                    tol=args.tol, out_csv=args.out_csv, out_svg=args.out_svg)
    system = ce.example1_system()
    fig = Figure(title=f"two segments and a cylinder, eps = {eps:g}", xlabel="x", ylabel="y", equal_aspect=True)
    _draw_sets_xy(fig, system)
    csv_parts = []
    for n, u0 in enumerate(cfg.starts):
        traj = engine.run_lambda_process(system, u0, engine.constant_schedule(eps, cfg.max_loops, 3),
                                         record_loops=True)
        pts = np.vstack([u0[None, :], *traj.loops])
        z_fixed = bool(np.all(pts[:, 2] == u0[2]))
        cyc = engine.solve_cycle(system, traj.points[-1], eps, tol=1e-10)
        print(f"start {n}: u0={np.array2string(u0, precision=4)} z constant: {z_fixed} "
              f"cycle diameter {cyc.diameter:.6g} residual {cyc.residual:.2e}")
        text = engine.trajectory_to_csv(traj, 3, 3)
        csv_parts.append(text if n == 0 else text.split("\n", 1)[1])
        color = ("#1e8449", "#7d3c98", "#b9770e", "#17202a")[n % 4]
        fig.polyline(pts[:, :2], stroke=color, width=0.8)
        fig.polyline(np.vstack([cyc.u, cyc.u[:1]])[:, :2], stroke=color, width=2.5)
        fig.markers(u0[None, :2], fill=color, size=4)
    _write(cfg.out_csv, "".join(csv_parts))
    if cfg.out_svg:
        fig.save(cfg.out_svg)
    return 0


def cmd_counterexample_sweep(args) -> int:
    model = load_model(args)
    cfg = RunConfig("counterexample-sweep", K=args.K, epsilons=epsilon_grid(args), tol=args.tol,
                    out_csv=args.out_csv, out_svg=args.out_svg)
    contacts = ce.contact_grid(model)
    if not contacts:
        print(f"warning: K too small (K={model.K}); need K >= 3 for two segments "
              "to compare", file=sys.stderr)
    contact_eps = [ce.epsilon_of_contact(model, c) for c in contacts]
    extra = []
    for e in cfg.epsilons:
        if e < ce.epsilon_reach(model):
            print(f"warning: eps={e:g} is below the reach {ce.epsilon_reach(model):.4g} "
                  f"of K={model.K}; skipped", file=sys.stderr)
        else:
            extra.append(e)
    epsilons = sorted(set(contact_eps) | set(extra), reverse=True)
    points = ce.epsilon_sweep(model, epsilons, tol=cfg.tol, max_workers=args.workers,
                              warm_start=args.workers is None)
    by_eps = {p.epsilon: p for p in points}
    failures = [p for p in points if p.error]
    for p in failures:
        print(f"eps={p.epsilon:.6g}: solver failed: {p.error}", file=sys.stderr)

    heights = {(c.k, c.s): by_eps[e].height for c, e in zip(contacts, contact_eps)}
    witness = bool(contacts) and ce.oscillation_witness(model, heights)
    changes = ce.sign_changes([by_eps[e].height for e in sorted(contact_eps, reverse=True)])
    for e in extra:
        p = by_eps[e]
        pred = ce.predicted_cycle(model, e)
        print(f"eps={e:.6g}: height {p.height:+.10f} predicted {ce.cycle_height(pred):+.10f} "
              f"max deviation {np.abs(p.cycle.u - pred.u).max() if p.cycle else np.nan:.2e}")
    print(f"K={model.K}: {len(points)} cycles, {len(failures)} failures, "
          f"{changes} sign changes over {len(contacts)} contact points")
    print(f"oscillation witness: {'holds' if witness else 'fails'}")

    _write(cfg.out_csv, ce.sweep_to_csv(points))
    if cfg.out_svg:
        ok = [p for p in points if p.cycle is not None]
        fig = Figure(title=f"cycle height vs epsilon, K = {model.K}", xlabel="epsilon",
                     ylabel="height")
        if ok:
            xy = np.array([[p.epsilon, p.height] for p in sorted(ok, key=lambda p: p.epsilon)])
            fig.polyline(xy, stroke="#2471a3")
            fig.markers(xy, fill="#2471a3", size=2.5)
        fig.save(cfg.out_svg)
        gallery = Figure(title="cycles in the xy-plane", xlabel="x", ylabel="y", equal_aspect=True)
        _draw_sets_xy(gallery, model.sets2d)
        for p in ok:
            gallery.polyline(np.vstack([p.cycle.u, p.cycle.u[:1]])[:, :2], stroke="#1e8449", width=0.8)
        gallery.save(_sibling(cfg.out_svg, "_gallery"))
    return 0 if witness and not failures else 1


def _sibling(path: str, suffix: str) -> str:
    stem, dot, ext = path.rpartition(".")
    return f"{stem}{suffix}.{ext}" if dot else path + suffix


def cmd_epsilon_of_contact(args) -> int:
    model = load_model(args)
    if args.epsilon:
        for e in args.epsilon:
            c = ce.invert_epsilon(model, e)
            if isinstance(c, ce.PathPoint):
                print(f"eps={e:.10g}: segment k={c.k} s={c.s:.12f} height {c.height:+.6f}")
            else:
                print(f"eps={e:.10g}: plateau at v_{c.k} height {c.height:+.0f}")
        return 0
    segments = [args.k] if args.k else range(1, model.n_segments + 1)
    if args.s:
        params = [float(x) for x in args.s.split(",")]
    else:
        params = list(np.linspace(0.0, 1.0, args.points, endpoint=False))
    rows = ["k,s,x,y,height,epsilon"]
    curve = []
    for k in segments:
        for s in params:
            c = ce.path_point(model, k, s)
            e = ce.epsilon_of_contact(model, c)
            rows.append(f"{k},{s:.17g},{c.point[0]:.17g},{c.point[1]:.17g},{c.height:.17g},{e:.17g}")
            curve.append((k - 1 + s, e))
            if args.s:
                print(f"k={k} s={s:g}: eps={e:.12f}")
    _write(args.out_csv, "\n".join(rows) + "\n")
    if args.out_svg:
        fig = Figure(title=f"eps(c) along the path, K = {model.K}", xlabel="path position",
                     ylabel="epsilon")
        curve = np.array(curve)
        for k in segments:
            seg = curve[(curve[:, 0] >= k - 1) & (curve[:, 0] < k)]
            fig.polyline(seg, stroke="#2471a3")
        fig.save(args.out_svg)
    return 0


def cmd_lambda_run(args) -> int:
    if not args.schedule:
        raise ConfigError("--schedule is required")
    pieces = parse_schedule(args.schedule)
    system = ce.example1_system() if args.system == "example1" else load_model(args).sets3d
    start = parse_vector(args.start[0]) if args.start else np.zeros(3)
    traj = engine.run_lambda_process(system, start, expand_schedule(pieces, system.m),
                                     record_every=args.record_every)
    # summarise every constant piece by the height at its end
    done = 0
    for lam, n, unit in pieces:
        loops = n if unit == "loops" else n / system.m
        done += loops
        if unit == "loops" and len(traj.index):
            j = np.searchsorted(traj.index, int(done) * system.m, side="right") - 1
            if j >= 0:
                print(f"lambda={lam:.10g} for {n} loops: height {traj.points[j, 2]:+.8f}")
    _write(args.out_csv, engine.trajectory_to_csv(traj, system.dim, system.m))
    if args.out_svg:
        fig = Figure(title="height along the lambda-process", xlabel="loop", ylabel="z")
        if len(traj.index):
            fig.polyline(np.column_stack([traj.index / system.m, traj.points[:, 2]]),
                         stroke="#2471a3", width=1.0)
        fig.save(args.out_svg)
    return 0


def cmd_least_squares(args) -> int:
    system = ce.example1_system() if args.system == "example1" else load_model(args).sets3d
    start = parse_vector(args.start[0]) if args.start else np.zeros(3)
    x = engine.solve_least_squares(system, start, tol=args.tol)
    g = engine.least_squares_gradient(system, x)
    print(f"least-squares point {np.array2string(x, precision=12)} "
          f"|grad| {np.linalg.norm(g):.3e} objective {engine.least_squares_objective(system, x):.12f}")
    if args.out_csv:
        _write(args.out_csv, "x,y,z,grad_norm\n" + ",".join(f"{v:.17g}" for v in x)
               + f",{np.linalg.norm(g):.17g}\n")
    return 0


def cmd_verify(args) -> int:
    reports = run_property_suite(args.seed, mutate=args.mutate)
    for r in reports:
        print(r.to_record())
    failed = [r.name for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed")
    if failed:
        print("failed: " + ", ".join(failed))
    if args.out_csv:
        lines = ["name,max_error,tolerance,samples,pass"]
        lines += [f"{r.name},{r.max_error:.17g},{r.tolerance:.17g},{r.samples},{int(r.passed)}"
                  for r in reports]
        _write(args.out_csv, "\n".join(lines) + "\n")
    return 0 if not failed else 1


COMMANDS = {
    "example1": cmd_example1,
    "counterexample-sweep": cmd_counterexample_sweep,
    "epsilon-of-contact": cmd_epsilon_of_contact,
    "lambda-run": cmd_lambda_run,
    "least-squares": cmd_least_squares,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--K", type=int, default=40, help="zig-zag points kept in the hull")
    common.add_argument("--angle-rule", default="default",
                        help="'default' or a file with one angle t_k per line")
    common.add_argument("--epsilon", type=float, action="append",
                        help="relaxation parameter (repeatable)")
    common.add_argument("--eps-min", type=float)
    common.add_argument("--eps-max", type=float)
    common.add_argument("--eps-steps", type=int, default=20)
    common.add_argument("--start", action="append", default=[], help="start point x,y,z (repeatable; write --start=-1,0,0 for a leading minus)")
    common.add_argument("--tol", type=float, default=1e-11)
    common.add_argument("--max-loops", type=int, default=200)
    common.add_argument("--schedule", help='comma list of steps and "const:EPS:N" loop blocks')
    common.add_argument("--out-csv")
    common.add_argument("--out-svg")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cyclicproj", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("example1", parents=[common], help="two segments and a cylinder")
    sw = sub.add_parser("counterexample-sweep", parents=[common], help="oscillating cycle heights")
    sw.add_argument("--workers", type=int, help="solve grid points in parallel (no warm start)")
    ec = sub.add_parser("epsilon-of-contact", parents=[common], help="eps(c) along the path")
    ec.add_argument("--k", type=int, help="segment index")
    ec.add_argument("--s", help="comma list of path parameters in [0, 1]")
    ec.add_argument("--points", type=int, default=100, help="grid points per segment")
    lr = sub.add_parser("lambda-run", parents=[common], help="step-size schedule run")
    lr.add_argument("--system", choices=("counterexample", "example1"), default="counterexample")
    lr.add_argument("--record-every", type=int, default=1)
    ls = sub.add_parser("least-squares", parents=[common], help="least-squares point")
    ls.add_argument("--system", choices=("counterexample", "example1"), default="counterexample")
    vf = sub.add_parser("verify", parents=[common], help="run the property suite")
    vf.add_argument("--mutate", choices=MUTATIONS)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ce.EpsilonRangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
