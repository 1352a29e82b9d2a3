import math
from fractions import Fraction

import numpy as np
import pytest

from dasplit.torus import (
    Direction,
    angle_between,
    fixed_points_exact,
    fixed_points_of_linear,
    linear_model,
    operator_norm,
    torus_distance,
    wrap,
    wrap_array,
)


def test_wrap_examples():
    assert wrap((0.3, 0.7)) == (0.3, 0.7)
    assert wrap((1.25, -0.5)) == (0.25, 0.5)
    assert wrap((5.0, -3.0)) == (0.0, 0.0)


def test_wrap_idempotent_and_in_cell():
    X = np.random.default_rng(1).normal(scale=10, size=(1000, 2))
    W = wrap_array(X)
    assert np.all((W >= 0) & (W < 1))
    assert np.array_equal(wrap_array(W), W)
    assert wrap((-1e-300, 0.0)) == (0.0, 0.0)


def test_wrap_rejects_non_finite():
    with pytest.raises(ValueError):
        wrap((math.nan, 0.0))


def test_torus_distance_examples():
    assert torus_distance((0, 0), (0, 0)) == 0
    assert torus_distance((0.1, 0), (0.9, 0)) == pytest.approx(0.2)
    assert torus_distance((0, 0), (0.2, 0.4)) == pytest.approx(math.sqrt(0.2), abs=1e-12)
    P = np.random.default_rng(2).random((500, 4))
    assert max(torus_distance(p[:2], p[2:]) for p in P) <= math.sqrt(2) / 2


def test_linear_model_constants():
    m = linear_model()
    assert m.A == ((5, 3), (3, 2))
    assert m.mu == pytest.approx(6.854101966, abs=1e-9)
    assert m.lam == pytest.approx(0.145898034, abs=1e-9)
    assert abs(m.lam * m.mu - 1) < 1e-12
    assert math.sqrt(m.mu) == pytest.approx((3 + math.sqrt(5)) / 2, abs=1e-12)
    assert m.lam ** 2 == pytest.approx(0.021286236, abs=1e-9)
    assert math.sqrt(m.mu) - m.lam == pytest.approx(2.472135955, abs=1e-9)


def test_eigen_frame_is_orthonormal_eigenbasis():
    m = linear_model()
    P = m.frame
    assert np.allclose(P.T @ P, np.eye(2), atol=1e-15)
    assert np.allclose(P.T @ m.matrix @ P, np.diag([m.lam, m.mu]), atol=1e-13)
    assert angle_between(m.e_s, m.e_u) == pytest.approx(math.pi / 2, abs=1e-15)


def test_fixed_points_exact():
    m = linear_model()
    pts = fixed_points_exact(m)
    assert len(pts) == 5
    assert (Fraction(0), Fraction(0)) in pts
    assert (Fraction(1, 5), Fraction(2, 5)) in pts
    # brute-force scan of the (1/5) lattice agrees
    scan = [(Fraction(i, 5), Fraction(j, 5)) for i in range(5) for j in range(5)
            if ((5 * Fraction(i, 5) + 3 * Fraction(j, 5) - Fraction(i, 5)).denominator == 1
                and (3 * Fraction(i, 5) + 2 * Fraction(j, 5) - Fraction(j, 5)).denominator == 1)]
    assert sorted(scan) == sorted(pts)
    # orbit of (4/5, 3/5) under translation by itself
    g = (Fraction(4, 5), Fraction(3, 5))
    orbit = {((k * g[0]) % 1, (k * g[1]) % 1) for k in range(5)}
    assert orbit == set(pts)
    assert len(fixed_points_of_linear(m)) == 5


def test_eigen_frame_round_trip():
    m = linear_model()
    rng = np.random.default_rng(3)
    c = (0.2, 0.4)
    for _ in range(10_000 // 10):
        r = rng.random() * 0.24
        th = rng.random() * 2 * math.pi
        x = (c[0] + r * math.cos(th), c[1] + r * math.sin(th))
        u = m.to_eigen_frame(x, c)
        y = m.from_eigen_frame(*u, c)
        assert math.hypot(y[0] - x[0], y[1] - x[1]) < 1e-13
        assert abs(math.hypot(*u) - torus_distance(x, c)) < 1e-13
    assert m.to_eigen_frame(c, c) == (0.0, 0.0)
    with pytest.raises(ValueError):
        m.to_eigen_frame((c[0] + 0.3, c[1]), c)


def test_operator_norm_and_angles():
    m = linear_model()
    assert operator_norm(np.eye(2)) == pytest.approx(1.0)
    assert operator_norm(np.diag([m.lam, m.mu])) == pytest.approx(m.mu, abs=1e-12)
    assert operator_norm(m.matrix) == pytest.approx(m.mu, abs=1e-12)
    assert angle_between(Direction(0.3), Direction(0.3)) == 0
    assert angle_between(Direction(0.0), Direction(math.pi / 2)) == pytest.approx(math.pi / 2)
    assert Direction(math.pi + 0.1).theta == pytest.approx(0.1)
