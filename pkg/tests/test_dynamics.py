import math

import numpy as np
import pytest

from dasplit.dynamics import (
    TorusCurve,
    basin_hitting_times,
    curve_passes_through,
    default_capture_radius,
    export_fixed_points_json,
    find_fixed_points,
    fixed_point_record,
    grow_stable_manifold,
    grow_unstable_manifold,
    in_basin_of_sink,
    polyline_distance,
    rk4_polyline,
    signed_position,
    tangent_deviation,
    trace_integral_curve,
    trace_integral_curves,
)
from dasplit.experiments import find_site
from dasplit.torus import fixed_points_of_linear, torus_distance


@pytest.fixture(scope="module")
def census(example_map):
    return find_fixed_points(example_map)


@pytest.fixture(scope="module")
def site(example_map):
    return find_site(example_map)


@pytest.fixture(scope="module")
def wuu(example_map, site):
    return grow_unstable_manifold(example_map, site.p, 0.1, example_map.eps / 500)


def test_linear_census(linear_map):
    recs = find_fixed_points(linear_map)
    assert len(recs) == 5
    assert all(r.kind == "saddle" for r in recs)
    exact = fixed_points_of_linear(linear_map.base)
    for r in recs:
        assert min(torus_distance(r.location, e) for e in exact) < 1e-12
    with pytest.raises(ValueError):
        find_fixed_points(linear_map, seed_grid_n=128)


def test_example_census(example_map, census):
    f = example_map
    mu, lam = f.base.mu, f.base.lam
    kinds = [r.kind for r in census]
    assert kinds.count("source") == 1 and kinds.count("sink") == 1
    src = next(r for r in census if r.kind == "source")
    snk = next(r for r in census if r.kind == "sink")
    assert torus_distance(src.location, (0, 0)) < 1e-15
    assert np.allclose(np.abs(src.eigenvalues), [1.5, mu], atol=1e-9)
    assert np.allclose(np.abs(snk.eigenvalues), [0.5, 0.85], atol=1e-9)
    for r in census:
        assert r.residual < 1e-11
        y = f.step(r.point)[0]
        assert torus_distance(y, r.point) < 1e-11
        if torus_distance(r.location, (0, 0)) >= f.eps:
            assert r.kind == "saddle"
            assert np.allclose(np.abs(r.eigenvalues), [lam, mu], atol=1e-9)
    qp = [r for r in census if r.kind == "saddle" and np.allclose(np.abs(r.eigenvalues), [0.5, mu], atol=1e-9)]
    assert len(qp) == 1


def test_fixed_point_json(census, tmp_path):
    p = tmp_path / "fp.json"
    export_fixed_points_json(census, p)
    text = p.read_text()
    assert '"schema": 1' in text and text.count('"kind"') == len(census)


def test_capture_radius_contracts(example_map, site):
    r = default_capture_radius(example_map, site.q)
    assert 0 < r < 1e-12
    J0 = example_map.jacobians(site.q.point)[0]
    th = np.linspace(0, 2 * np.pi, 33)
    X = site.q.point + r * np.stack([np.cos(th), np.sin(th)], 1)
    dJ = example_map.jacobians(X) - J0
    assert np.linalg.norm(dJ, ord=2, axis=(1, 2)).max() < 0.075


def test_basin_examples(example_map, site):
    f = example_map
    res = in_basin_of_sink(f, site.q.point, site.q)
    assert res.in_basin and res.hitting_time == 0
    res = in_basin_of_sink(f, site.p.point, site.q, max_iter=200)
    assert not res.in_basin and res.undetermined
    with pytest.raises(ValueError):
        in_basin_of_sink(f, site.p.point, site.p)
    # along the weak axis: inside the lens the point is captured quickly
    ch = f.charts[site.chart_index]
    ev = ch.frame[:, 1]
    res = in_basin_of_sink(f, site.q.point + 1e-13 * ev, site.q, max_iter=50)
    assert res.in_basin and res.hitting_time <= 50
    # at eps/10 along the weak axis the point lies far outside the lens
    res = in_basin_of_sink(f, site.q.point + f.eps / 10 * ev, site.q, max_iter=200)
    assert not res.in_basin


def test_basin_monotone(example_map, site):
    f = example_map
    ch = f.charts[site.chart_index]
    rng = np.random.default_rng(13)
    U = np.asarray(ch.inner_center_offset) + np.stack(
        [rng.uniform(-3e-9, 3e-9, 200), rng.uniform(-1.2e-13, 1.2e-13, 200)], 1)
    X = f.chart_to_lift(ch, U)
    T = basin_hitting_times(f, X, site.q, max_iter=400)
    T1 = basin_hitting_times(f, f.step(X), site.q, max_iter=400)
    inb = T >= 0
    assert inb.sum() > 20
    assert np.all(T1[inb] >= 0) and np.all(T1[inb] <= T[inb])


def test_wuu_single_da_on_axis(single_da):
    p = fixed_point_record(single_da, np.zeros(2))
    assert p.kind == "source"
    w = grow_unstable_manifold(single_da, p, 0.1, single_da.eps / 500)
    u = single_da.lift_to_chart(single_da.charts[0], w.polyline().vertices)
    assert np.abs(u[:, 0]).max() < 1e-9


def test_wuu_example(example_map, wuu):
    step = example_map.eps / 500
    assert all(abs(L - 0.1) <= step for L in wuu.branch_lengths())
    line = wuu.polyline()
    assert line.max_gap() <= 1.5 * step
    assert tangent_deviation(example_map, line, "F", 50) < 1e-4
    assert wuu.verification["passed"] and wuu.verification_depth >= 1
    # forward invariance on the part that maps inside the segment
    pos = signed_position(line.vertices, line.center_index, line.vertices[::200])
    inner = line.vertices[::200][np.abs(pos) < 0.9 * 0.1 / example_map.base.mu]
    Y = example_map.step(inner)
    Y -= np.round(Y - wuu.base.point)
    assert polyline_distance(line.vertices, Y).max() <= 2 * step


def test_wss_theorem_p2(theorem_map):
    f = theorem_map
    p2 = fixed_point_record(f, np.array([0.2, 0.4]))
    assert p2.kind == "sink"
    step = f.eps / 500
    w = grow_stable_manifold(f, p2, 0.1, step)
    assert all(abs(L - 0.1) <= step for L in w.branch_lengths())
    assert tangent_deviation(f, w.polyline(), "E", 50) < 1e-4
    with pytest.raises(ValueError):
        grow_stable_manifold(f, fixed_point_record(f, np.zeros(2)), 0.1, step)


def test_wss_linear_along_es(linear_map):
    p = fixed_point_record(linear_map, np.zeros(2))
    w = grow_stable_manifold(linear_map, p, 0.1, 1e-3)
    V = w.polyline().vertices
    es = linear_map.base.frame[:, 0]
    assert np.abs(V[:, 0] * es[1] - V[:, 1] * es[0]).max() < 1e-12


def test_linear_curve_is_straight(linear_map):
    x = np.array([0.3, 0.6])
    c = trace_integral_curve(linear_map, x, "E", 0.1, 1e-3)
    es = linear_map.base.frame[:, 0]
    d = c.vertices - x
    assert np.abs(d[:, 0] * es[1] - d[:, 1] * es[0]).max() < 1e-10
    assert c.length == pytest.approx(0.2, abs=1e-12)
    assert c.max_gap() <= 1.5e-3


def test_curve_reversal(example_map):
    f = example_map
    L = 1.5 * f.eps
    x = np.array([1e-4, 2e-4])
    c = trace_integral_curve(f, x, "E", L, f.eps / 500)
    end = c.vertices[-1]
    c2 = trace_integral_curve(f, end, "E", L, f.eps / 500)
    assert np.hypot(*(c2.vertices[0] - x)) < 5 * L * 1e-6
    assert tangent_deviation(f, c, "E", 100) < 1e-4
    assert c.max_gap() <= 1.5 * c.step


def test_rk4_order():
    def rot(x):
        r = math.hypot(x[0], x[1])
        return np.array([-x[1], x[0]]) / r

    L = 1.0
    exact = np.array([math.cos(L), math.sin(L)])
    hs = np.array([0.1, 0.05, 0.025, 0.0125])
    errs = [np.hypot(*(rk4_polyline(rot, [1.0, 0.0], L, h)[-1] - exact)) for h in hs]
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 3.5 < order < 4.5
    ends = [rk4_polyline(rot, [1.0, 0.0], L, h)[-1] for h in hs]
    diffs = [np.hypot(*(ends[k] - ends[k + 1])) for k in range(3)]
    rich = np.polyfit(np.log(hs[:3]), np.log(diffs), 1)[0]
    assert 3.5 < rich < 4.5


def test_tracer_rejects_bad_bundle(linear_map):
    with pytest.raises(ValueError):
        trace_integral_curves(linear_map, np.zeros((1, 2)), "G")


def test_curve_passes_through():
    V = np.stack([np.linspace(-1e-3, 1e-3, 21), np.zeros(21)], 1)
    c = TorusCurve(V, "E_curve", 1e-4, center_index=10)
    ok, d, s = curve_passes_through(c, V[3], 1e-6)
    assert ok and d == 0 and s == pytest.approx(3e-4)
    ok, d, _ = curve_passes_through(c, (0.0, 2e-6), 1e-6)
    assert not ok and d == pytest.approx(2e-6)
    ok, d, _ = curve_passes_through(c, (0.0, 0.0), 1e-4)
    assert ok and d == 0


def test_curve_csv(tmp_path):
    V = np.array([[0.0, 0.0], [1.2, -0.1]])
    c = TorusCurve(V, "E_curve", 1.0)
    p = tmp_path / "c.csv"
    c.to_csv(p)
    rows = p.read_text().splitlines()
    assert rows[0] == "arclength,x1,x2,lifted_x1,lifted_x2"
    vals = [float(v) for v in rows[2].split(",")]
    assert vals[1] == pytest.approx(0.2) and vals[2] == pytest.approx(0.9) and vals[3] == 1.2
