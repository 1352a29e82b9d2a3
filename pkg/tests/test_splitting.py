import math

import numpy as np
import pytest

from dasplit import kernels
from dasplit.splitting import (
    angle_report,
    bundle_vectors,
    check_cone_invariance,
    check_lemma2_conditions,
    compute_bundles,
    compute_E_direction,
    compute_F_direction,
    export_bundles_csv,
)
from dasplit.surgery import perturbed, stratified_points
from dasplit.torus import Direction, angle_between


def test_lemma2_linear(linear_map):
    lam = linear_map.base.lam
    c = check_lemma2_conditions(linear_map, 0.99 * lam ** 2, 2.0, 1e-3)
    assert c.passed
    assert c.margins["offdiag"] == 1e-3


def test_lemma2_example(example_map):
    c = check_lemma2_conditions(example_map, example_map.base.lam ** 2, 1.6, 5e-3)
    assert c.passed
    assert all(m > 0 for m in c.margins.values())
    assert c.as_dict()["passed"]


def test_lemma2_eta3_fails_near_q(example_map):
    f = example_map
    c = check_lemma2_conditions(f, f.base.lam ** 2, 3.0, 5e-3)
    assert not c.passed and not c.verdicts["domination"]
    w = c.witnesses["domination"]
    ch = f.charts[0]
    u = f.lift_to_chart(ch, np.array([w["point"]]))[0] - np.asarray(ch.inner_center_offset)
    k1, k2 = ch.inner.support
    assert abs(u[0]) <= k1 and abs(u[1]) <= k2
    a, d = w["entries"][0], w["entries"][3]
    assert d / a < 3


def test_grid_and_delta_preconditions(example_map):
    with pytest.raises(ValueError):
        check_lemma2_conditions(example_map, 0.02, 1.6, 5e-3, grid_n=64)
    with pytest.raises(ValueError):
        check_cone_invariance(example_map, math.pi / 4)


def test_cones(linear_map, example_map):
    c = check_cone_invariance(linear_map, 0.01)
    assert c.passed
    lam, mu = linear_map.base.lam, linear_map.base.mu
    assert c.margins["unstable_cone"] == pytest.approx(1 - lam / mu, abs=1e-12)
    assert check_cone_invariance(example_map, 9e-4).passed


def test_cones_fail_outside_domain(example_map):
    f = example_map
    g = perturbed(f, f.base.frame[:, 1] * 0.06, 0.002, 0.1)
    c = check_cone_invariance(g, 0.01)
    assert not c.passed
    x = np.array([c.witnesses["unstable_cone"]["point"]])
    assert g.in_modified_region(x)[0]


def test_linear_bundles_are_eigenlines(linear_map):
    m = linear_map.base
    F = compute_F_direction(linear_map, (0.3, 0.7))
    E = compute_E_direction(linear_map, (0.3, 0.7))
    assert angle_between(F.F_dir, m.e_u) < 1e-15
    assert angle_between(E.E_dir, m.e_s) < 1e-15
    assert F.convergence_residual == 0.0 and F.iterations_used == 8
    with pytest.raises(ValueError):
        compute_F_direction(linear_map, (0.3, 0.7), n=20_000)


def test_bundles_at_fixed_points(example_map):
    f = example_map
    ch = f.charts[0]
    m = f.base
    Fp = compute_F_direction(f, (0.0, 0.0)).F_dir
    assert angle_between(Fp, Direction.from_vector(ch.frame[:, 1])) < 1e-9
    q = f.chart_to_lift(ch, np.array([ch.inner_center_offset]))[0]
    Eq = compute_E_direction(f, q).E_dir
    assert angle_between(Eq, Direction.from_vector(ch.frame[:, 0])) < 1e-9
    b = compute_bundles(f, q)
    assert b.converged and angle_between(b.E_dir, b.F_dir) > 0
    assert angle_between(Fp, m.e_u) < 1e-9


def test_residual_decay_ratio(example_map):
    f = example_map
    T = f.table
    rng = np.random.default_rng(11)
    X = stratified_points(f, 20, 40, 40, rng)[:100]
    for which in (0, 1):
        R = np.array([kernels.backend.bundle(T, X, which, n, 0.0, n)[1] for n in range(2, 10)])
        for k in range(R.shape[1]):
            r = R[:, k]
            ok = r > 1e-13
            if ok.sum() < 3:
                continue
            slope = np.polyfit(np.flatnonzero(ok), np.log(r[ok]), 1)[0]
            assert slope <= math.log(1 / 1.6) + 0.05


def test_angle_reports(linear_map, example_map, theorem_map):
    r = angle_report(linear_map, 1000)
    assert r["max_angle_E_es"] == 0 and r["max_angle_F_eu"] == 0
    for f in (example_map, theorem_map):
        r = angle_report(f, 1000)
        assert r["passed"]
        assert r["max_angle_E_es"] < 9e-4 and r["max_angle_F_eu"] < 9e-4
        assert r["min_angle_E_F"] > math.pi / 2 - 2 * 9e-4


def test_bundle_invariance(example_map):
    f = example_map
    rng = np.random.default_rng(12)
    X = stratified_points(f, 200, 200, 200, rng)[:1000]
    Y = f.step(X)
    J = f.jacobians(X)
    for which in ("E", "F"):
        V, _, _ = bundle_vectors(f, X, which)
        W, _, _ = bundle_vectors(f, Y, which)
        DV = np.einsum("nij,nj->ni", J, V)
        DV /= np.hypot(DV[:, 0], DV[:, 1])[:, None]
        ang = np.arctan2(np.abs(DV[:, 0] * W[:, 1] - DV[:, 1] * W[:, 0]), np.abs((DV * W).sum(axis=1)))
        assert ang.max() < 1e-9


def test_export_csv(example_map, tmp_path):
    p = tmp_path / "b.csv"
    export_bundles_csv(example_map, np.array([[0.1, 0.2], [0.0, 0.0]]), p)
    lines = p.read_text().splitlines()
    assert lines[0] == "x1,x2,theta_E,theta_F,residual"
    assert len(lines) == 3
