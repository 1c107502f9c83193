import math

import numpy as np
import pytest
from scipy.optimize import brentq

from cyclicproj import counterexample as ce
from cyclicproj import engine
from cyclicproj.convex_sets import sets_from_text, verify_projection


def epsilon_by_root_finding(model, c):
    """eps at which the closed-form cycle projects onto c: the normal-cone condition."""
    d = model.v[c.k] - model.v[c.k - 1]

    def f(e):
        return (ce.cycle_from_support_2d(e, c.point)[1] - c.point) @ d

    return brentq(f, 1e-9, 1.0, xtol=1e-15)


def test_model_k2_values():
    m = ce.build_model(2)
    assert np.allclose(m.t, [math.pi / 4, 3 * math.pi / 8])
    assert np.allclose(m.v, [[0.7071068, 0.7071068], [0.3826834, 0.9238795]], atol=1e-7)
    assert list(m.p[:, 2]) == [-1.0, 1.0]


@pytest.mark.parametrize("K", [2, 5, 40])
def test_heights_alternate(K):
    m = ce.build_model(K)
    assert np.array_equal(m.p[:, 2], [(-1.0) ** k for k in range(1, K + 1)])
    assert np.array_equal(ce.project_xy(m.p), m.v)


def test_generators_with_and_without_limit():
    assert ce.build_model(6, include_limit=False).sets3d[2].generators.shape == (6, 3)
    assert ce.build_model(6).sets3d[2].generators.shape == (8, 3)


@pytest.mark.parametrize("angles", [
    [0.7, 1.0, 1.2],  # t_1 is not pi/4
    [math.pi / 4, 1.2, 1.1],  # not increasing
    [math.pi / 4, 1.2, math.pi / 2],  # reaches pi/2
    [math.pi / 4, 1.2],  # too short for K=3
])
def test_bad_angle_rules_rejected(angles):
    with pytest.raises(ValueError):
        ce.build_model(3, angles)


def test_custom_angle_list():
    angles = [math.pi / 4, 1.0, 1.3, 1.5]
    m = ce.build_model(4, angles)
    assert np.allclose(m.v[1], [math.cos(1.0), math.sin(1.0)])


def test_k_too_small_rejected():
    with pytest.raises(ValueError):
        ce.build_model(1)


def test_vertices_are_extreme(model40):
    hull = model40.sets2d[2]
    for k in range(model40.K):
        others = np.delete(hull.generators, k, axis=0)
        w = engine.as_vec(ce.Hull(others).project(model40.v[k]).point)
        assert np.linalg.norm(w - model40.v[k]) > 1e-9


def test_lift_and_path_points(model12):
    assert np.array_equal(ce.lift(model12, ce.path_point(model12, 3, 0.0)), model12.p[2])
    mid = ce.lift(model12, ce.path_point(model12, 1, 0.5))
    assert np.allclose(mid, [*(0.5 * (model12.v[0] + model12.v[1])), 0.0])
    assert ce.path_point(model12, 4, 0.25).height == 0.5
    assert ce.path_point(model12, 4, 0.75).height == -0.5
    with pytest.raises(ValueError):
        ce.path_point(model12, 12, 0.5)
    with pytest.raises(ValueError):
        ce.path_point(model12, 2, 1.5)


def test_locate_round_trip(model12):
    c = ce.path_point(model12, 5, 0.3)
    back = ce.locate(model12, c.point)
    assert back.k == 5 and abs(back.s - 0.3) <= 1e-10


def test_epsilon_at_first_vertex_k2():
    m = ce.build_model(2)
    c = ce.path_point(m, 1, 0.0)
    d = m.direction(1)
    assert np.allclose(d, [-0.8314696, 0.5555702], atol=1e-7)
    alpha, beta = (ce.A - c.point) @ d, (ce.B - c.point) @ d
    # quoted reference values carry about five digits
    assert abs(alpha - 2.96919) <= 5e-5 and abs(beta + 0.35669) <= 5e-5
    assert abs(ce.epsilon_of_contact(m, c) - 0.87987) <= 1e-5


def test_epsilon_matches_normal_cone_root(model12, rng):
    for _ in range(30):
        c = ce.path_point(model12, int(rng.integers(1, 11)), float(rng.uniform(0, 1)))
        assert abs(ce.epsilon_of_contact(model12, c) - epsilon_by_root_finding(model12, c)) <= 1e-12


def test_epsilon_in_unit_interval(model40, rng):
    for _ in range(200):
        c = ce.path_point(model40, int(rng.integers(1, 40)), float(rng.uniform(0, 1)))
        assert 0.0 < ce.epsilon_of_contact(model40, c) < 1.0


def test_epsilon_at_midpoints_decreases(model40):
    eps = [ce.epsilon_of_contact(model40, ce.path_point(model40, k, 0.5)) for k in range(1, 40)]
    assert np.all(np.diff(eps) < 0)


def test_directions_approach_minus_x(model40):
    dist = [np.linalg.norm(model40.direction(k) - [-1.0, 0.0]) for k in range(1, 40)]
    assert np.all(np.diff(dist) < 0)
    assert dist[-1] < 0.1


def test_reach_shrinks_with_k():
    reach = [ce.epsilon_reach(ce.build_model(K)) for K in (5, 10, 20, 40)]
    assert np.all(np.diff(reach) < 0)
    assert reach[-1] < 0.1


def test_cycle_at_first_vertex(model12):
    cyc = ce.cycle_from_contact(model12, ce.path_point(model12, 1, 0.0))
    assert np.all(cyc.u[:, 2] == -1.0)
    assert cyc.residual <= 1e-14


def test_cycle_support_recovers_contact(model12):
    c = ce.path_point(model12, 1, 0.5)
    cyc = ce.cycle_from_contact(model12, c)
    w = engine.support_of(model12.sets3d, cyc.u)
    assert np.allclose(w[0], [*ce.A, c.height], atol=1e-8)
    assert np.allclose(w[1], [*ce.B, c.height], atol=1e-8)
    assert np.allclose(w[2], ce.lift(model12, c), atol=1e-8)


def test_heights_alternate_at_quarter_points(model12):
    h = [ce.cycle_from_contact(model12, ce.path_point(model12, k, 0.25)).u[0, 2] for k in range(1, 11)]
    assert np.allclose(np.abs(h), 0.5)
    assert all(a * b < 0 for a, b in zip(h, h[1:]))


def test_invert_round_trip(model40, rng):
    for _ in range(30):
        c = ce.path_point(model40, int(rng.integers(1, 40)), float(rng.uniform(0.01, 0.99)))
        back = ce.invert_epsilon(model40, ce.epsilon_of_contact(model40, c))
        assert isinstance(back, ce.PathPoint) and back.k == c.k
        assert abs(back.s - c.s) <= 1e-10


def test_invert_plateau_and_edges(model12):
    lo, hi = ce.plateau_range(model12, 4)
    assert lo < hi
    p = ce.invert_epsilon(model12, 0.5 * (lo + hi))
    assert isinstance(p, ce.Plateau) and p.k == 4 and p.height == 1.0
    below = ce.invert_epsilon(model12, lo * (1 - 1e-9))
    assert isinstance(below, ce.PathPoint) and below.k == 4 and below.s < 1e-6
    top = ce.invert_epsilon(model12, 1.0)
    assert isinstance(top, ce.Plateau) and top.k == 1
    with pytest.raises(ce.EpsilonRangeError):
        ce.invert_epsilon(model12, 0.5 * ce.epsilon_reach(model12))


def test_plateau_cycle_is_a_cycle(model12):
    lo, hi = ce.plateau_range(model12, 3)
    eps = 0.5 * (lo + hi)
    cyc = ce.predicted_cycle(model12, eps)
    assert np.all(cyc.u[:, 2] == -1.0)
    assert cyc.residual <= 1e-13
    solved = engine.solve_cycle(model12.sets3d, [1.0, 1.0, 1.0], eps)
    assert np.abs(solved.u - cyc.u).max() <= 1e-8


def test_sweep_large_epsilons(model40):
    pts = ce.epsilon_sweep(model40, [1.0, 0.9])
    assert all(p.error is None for p in pts)
    assert pts[0].cycle.residual <= 1e-10
    assert isinstance(pts[1].contact, ce.Plateau) and pts[1].contact.k == 1
    assert abs(pts[1].height + 1.0) <= 1e-8


def test_sweep_matches_prediction(model40):
    pts = ce.epsilon_sweep(model40, [0.5, 0.2])
    for p in pts:
        pred = ce.predicted_cycle(model40, p.epsilon)
        assert np.abs(p.cycle.u - pred.u).max() <= 1e-8
        assert ce.z_spread(p.cycle) <= 1e-8


def test_parallel_sweep_equals_sequential(model12):
    eps = [ce.epsilon_of_contact(model12, c) for c in ce.contact_grid(model12, [2, 3])]
    seq = ce.epsilon_sweep(model12, eps, warm_start=False)
    par = ce.epsilon_sweep(model12, eps, warm_start=False, max_workers=2)
    for a, b in zip(seq, par):
        assert np.array_equal(a.cycle.u, b.cycle.u)


def test_sweep_records_failures(model40, monkeypatch):
    real = ce.solve_cycle

    def flaky(system, start, eps, **kw):
        if eps == 0.5:
            raise engine.ConvergenceError("no luck", 1.0)
        return real(system, start, eps, **kw)

    monkeypatch.setattr(ce, "solve_cycle", flaky)
    pts = ce.epsilon_sweep(model40, [0.6, 0.5, 0.4])
    assert pts[1].cycle is None and pts[1].error == "no luck"
    assert math.isnan(pts[1].height)
    assert pts[0].cycle is not None and pts[2].cycle is not None


def test_oscillation_witness(model12):
    good = {(k, s): ce.path_point(model12, k, s).height for k in (1, 2, 3) for s in (0.25, 0.75)}
    assert ce.oscillation_witness(model12, good)
    flat = {key: abs(h) for key, h in good.items()}
    assert not ce.oscillation_witness(model12, flat)
    small = dict(good)
    small[(2, 0.25)] *= 0.9
    assert not ce.oscillation_witness(model12, small)
    assert not ce.oscillation_witness(model12, {(1, 0.25): -0.5, (1, 0.75): 0.5})
    assert not ce.oscillation_witness(model12, {})


def test_sign_changes():
    assert ce.sign_changes([1, -1, -2, 3, 0, -1]) == 3
    assert ce.sign_changes([]) == 0


def test_contact_grid_order(model12):
    grid = ce.contact_grid(model12)
    assert len(grid) == 2 * 10
    eps = [ce.epsilon_of_contact(model12, c) for c in grid]
    assert np.all(np.diff(eps) < 0)
    assert ce.contact_grid(ce.build_model(2)) == []


def test_sweep_csv_round_trip(model12):
    pts = ce.epsilon_sweep(model12, [0.9, 0.4, 0.3])
    pts.append(ce.SweepPoint(0.25, None, float("nan"), error="boom"))
    text = ce.sweep_to_csv(pts)
    rows = ce.sweep_from_csv(text)
    assert [r["epsilon"] for r in rows] == [0.9, 0.4, 0.3, 0.25]
    for p, r in zip(pts[:3], rows):
        assert np.array_equal(p.cycle.u, r["u"])
        assert r["height"] == p.height
    assert rows[-1]["u"] is None and math.isnan(rows[-1]["height"])
    assert text == ce.sweep_to_csv(pts)


def test_model_text_round_trip(model12):
    sets = sets_from_text(ce.model_to_text(model12))
    assert np.array_equal(sets[2].generators, model12.sets3d[2].generators)


def test_example1_system_shape():
    system = ce.example1_system()
    assert system.m == 3 and system.dim == 3
    w = system[2].project([0.0, 5 / 3, 0.2]).point
    assert verify_projection(system[2], [0.0, 5 / 3, 0.2], w) <= 1e-12
