"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, shown in the terminal summary.
"""
import time

import numpy as np
import pytest
from conftest import record_criterion

from cyclicproj import counterexample as ce
from cyclicproj import engine
from cyclicproj import verification as V


def test_criterion_1_least_squares_set():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    systems = (ce.example1_system(), ce.build_model(40).sets3d)
    for system in systems:
        for _ in range(10):
            x = engine.solve_least_squares(system, rng.uniform(-10, 10, 3))
            worst = max(worst, abs(x[0]), abs(x[1] - 5 / 3))
    grad = max(np.linalg.norm(engine.least_squares_gradient(s, [0.0, 5 / 3, 0.0])) for s in systems)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and grad <= 1e-12 and elapsed < 1.0
    record_criterion(1, "least-squares set", ok,
                     f"max |x|,|y-5/3| = {worst:.2e}, |grad| = {grad:.2e}, {elapsed:.2f}s")
    assert worst <= 1e-6
    assert grad <= 1e-12
    assert elapsed < 1.0


@pytest.fixture(scope="module")
def cycles_k40():
    model = ce.build_model(40)
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    out = {eps: [engine.solve_cycle(model.sets3d, rng.uniform(-10, 10, 3), eps) for _ in range(5)]
           for eps in (0.9, 0.5, 0.2, 0.05)}
    return model, out, time.perf_counter() - t0


def test_criterion_2_start_independence(cycles_k40):
    model, cycles, elapsed = cycles_k40
    spread = max(np.abs(c.u - cs[0].u).max() for cs in cycles.values() for c in cs)
    # the closed-form cycle is the same object, approached from the formula side
    to_pred = max(np.abs(c.u - ce.predicted_cycle(model, eps).u).max()
                  for eps, cs in cycles.items() for c in cs)
    ok = spread <= 1e-7 and elapsed < 30
    record_criterion(2, "unique epsilon-cycle", ok,
                     f"max start spread {spread:.2e}, vs closed form {to_pred:.2e}, {elapsed:.1f}s")
    assert spread <= 1e-7
    assert to_pred <= 1e-7
    assert elapsed < 30


def test_criterion_3_dimension_reduction(cycles_k40):
    model, cycles, _ = cycles_k40
    zs = max(ce.z_spread(c) for cs in cycles.values() for c in cs)
    res2d = max(engine.cycle_residual(model.sets2d, c.u[:, :2], eps)
                for eps, cs in cycles.items() for c in cs)
    ok = zs <= 1e-8 and res2d <= 1e-8
    record_criterion(3, "dimension reduction", ok, f"z-spread {zs:.2e}, 2D residual {res2d:.2e}")
    assert zs <= 1e-8
    assert res2d <= 1e-8


def test_criterion_4_closed_form_vs_iteration():
    model = ce.build_model(12)
    rng = np.random.default_rng(404)
    worst = 0.0
    for n in range(50):
        k = n % 10 + 1  # every segment 1..10 five times
        c = ce.path_point(model, k, float(rng.uniform(0.0, 1.0)))
        eps = ce.epsilon_of_contact(model, c)
        solved = engine.solve_cycle(model.sets3d, rng.uniform(-10, 10, 3), eps)
        formula = ce.cycle_from_contact(model, c)
        worst = max(worst, np.abs(solved.u - formula.u).max())
    alg = 0.0
    for _ in range(1000):
        w = rng.uniform(-10, 10, size=(3, 2))
        eps = float(rng.uniform(1e-3, 1.0))
        alg = max(alg, np.abs(engine.iterates_from_support(w, eps) - V.linear_cycle_oracle(w, eps)).max())
    ok = worst <= 1e-7 and alg <= 1e-12
    record_criterion(4, "closed form vs iteration", ok,
                     f"50 contacts max dev {worst:.2e}, support algebra {alg:.2e}")
    assert worst <= 1e-7
    assert alg <= 1e-12


def test_criterion_5_oscillation():
    model = ce.build_model(12)
    t0 = time.perf_counter()
    heights = {}
    start = np.zeros(3)
    for c in ce.contact_grid(model, range(1, 11)):
        cyc = engine.solve_cycle(model.sets3d, start, ce.epsilon_of_contact(model, c))
        heights[(c.k, c.s)] = ce.cycle_height(cyc)
    elapsed = time.perf_counter() - t0
    mag = max(abs(abs(h) - 0.5) for h in heights.values())
    alternates = all(heights[(k, s)] * heights[(k + 1, s)] < 0 for k in range(1, 10) for s in (0.25, 0.75))
    witness = ce.oscillation_witness(model, heights)
    ok = mag <= 1e-6 and alternates and witness and elapsed < 120
    record_criterion(5, "oscillating heights", ok,
                     f"||h|-0.5| <= {mag:.1e}, alternating {alternates}, witness {witness}, {elapsed:.1f}s")
    assert mag <= 1e-6
    assert alternates and witness
    assert elapsed < 120


def test_criterion_6_epsilon_monotone():
    model = ce.build_model(12)
    per = 1000 // (model.K - 1) + 1
    within = jumps = 0
    ends, starts = [], []
    for k in range(1, model.K):
        s = np.linspace(0.0, 1.0, per, endpoint=False)
        e = np.array([ce.epsilon_of_contact(model, ce.path_point(model, k, x)) for x in s])
        within += int(np.sum(np.diff(e) >= 0))
        starts.append(e[0])
        ends.append(ce.epsilon_of_contact(model, ce.path_point(model, k, 1.0)))
    # value just before v_{k+1} on segment k, then the value at v_{k+1} on segment k+1
    jumps = sum(1 for k in range(len(starts) - 1) if not starts[k + 1] < ends[k])
    seg_min = [min(a, b) for a, b in zip(starts, ends)]
    towards_zero = bool(np.all(np.diff(starts) < 0))
    final40 = ce.epsilon_reach(ce.build_model(40))
    ok = within == 0 and jumps == 0 and towards_zero and final40 < 0.1
    record_criterion(6, "monotone eps(c)", ok,
                     f"{per * (model.K - 1)} grid points, {within} non-decreasing steps, "
                     f"{jumps} missing jumps, last segment min {seg_min[-1]:.4f}, K=40 reach {final40:.4f}")
    assert within == 0 and jumps == 0
    assert towards_zero
    assert final40 < 0.1


def test_criterion_7_lambda_process():
    model = ce.build_model(12)
    e3 = ce.epsilon_of_contact(model, ce.path_point(model, 3, 0.25))
    e4 = ce.epsilon_of_contact(model, ce.path_point(model, 4, 0.25))
    target = {e: ce.cycle_height(engine.solve_cycle(model.sets3d, np.zeros(3), e)) for e in (e3, e4)}
    phases = [(e3, 100_000), (e4, 100_000), (e3, 100_000), (e4, 100_000)]
    traj = engine.run_lambda_process(model.sets3d, np.zeros(3), engine.piecewise_schedule(phases, 3),
                                     record_every=100_000)
    ends = traj.points[:, 2]
    devs = [abs(z - target[e]) for z, (e, _) in zip(ends, phases)]
    alternating = all(a * b < 0 for a, b in zip(ends, ends[1:]))
    ok = max(devs) <= 0.05 and alternating
    record_criterion(7, "lambda-process oscillation", ok,
                     f"phase-end heights {np.array2string(ends, precision=4)} vs "
                     f"{target[e3]:+.4f}/{target[e4]:+.4f}, max dev {max(devs):.2e}")
    assert max(devs) <= 0.05
    assert alternating


def test_criterion_8_projection_layer():
    rng = np.random.default_rng(808)
    reports = V.check_projections(rng, n=1000) + [V.check_hull_vs_oracle(rng, instances=100, tol=1e-7)]
    failed = [r.name for r in reports if not r.passed]
    hull = reports[-1]
    record_criterion(8, "projection layer", not failed,
                     f"{len(reports)} suites, failed {failed or 'none'}, hull vs QP {hull.max_error:.2e}")
    assert not failed


def test_criterion_9_plane_invariance():
    system = ce.example1_system()
    rng = np.random.default_rng(909)
    moved = 0
    for eps in (0.25, 0.5, 0.75):
        for _ in range(20):
            u = np.array([*rng.uniform(-10, 10, 2), rng.uniform(-1, 1)])
            z0 = u[2]
            for _ in range(100):
                u, its = engine.sweep(system, u, eps)
                moved += int(np.sum(its[:, 2] != z0))
    record_criterion(9, "plane invariance", moved == 0, f"{moved} iterates left their plane (60 runs x 100 loops)")
    assert moved == 0
