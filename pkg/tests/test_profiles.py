import math

import numpy as np
import pytest

from dasplit.profiles import (
    ProfileError,
    build_alpha,
    build_beta,
    build_shear,
    count_fixed_points,
    validate_profiles,
)
from dasplit.surgery import DEMO_EPS
from dasplit.torus import linear_model

M = linear_model()
LAM, MU = M.lam, M.mu
H2 = 0.8 * DEMO_EPS
H1 = DEMO_EPS / (3 * MU) * H2


@pytest.fixture(scope="module")
def alpha():
    return build_alpha(H1, LAM, LAM * LAM - LAM, math.sqrt(MU) - LAM, 1.5, 0.5)


@pytest.fixture(scope="module")
def beta():
    return build_beta(H2, 0.1 * H2)


def test_alpha_basic(alpha):
    assert alpha(0.0) == 0.0
    t = np.linspace(-H1, H1, 10_001)
    assert np.array_equal(alpha.value(-t), -alpha.value(t))
    assert alpha(H1) == 0.0 and alpha(-H1) == 0.0 and alpha(2 * H1) == 0.0
    assert LAM + alpha.derivative(0.0) == pytest.approx(1.5, abs=1e-14)


def test_alpha_flip_points(alpha):
    s = alpha.flip_points[1]
    assert alpha.flip_points[0] == -s
    assert abs(alpha(s) + LAM * s - s) < 1e-12 * s
    assert LAM + alpha.derivative(s) == pytest.approx(0.5, abs=1e-14)
    # derivative is constant on a neighbourhood of the flip points
    w = alpha.plateau_half_width
    d = alpha.derivative(np.linspace(s - 0.99 * w, s + 0.99 * w, 101))
    assert np.all(d == d[0])


def test_alpha_three_fixed_points(alpha):
    assert count_fixed_points(alpha) == 3


def test_alpha_slope_bounds(alpha):
    d = alpha.derivative(np.linspace(-H1, H1, 100_001))
    assert d.max() < math.sqrt(MU) - LAM
    assert d.min() > LAM * LAM - LAM


def test_alpha_max_abs_bound(alpha):
    amax = alpha.max_abs_value()
    assert amax <= (math.sqrt(MU) - LAM) * H1
    assert amax < MU * 2 * H1


def test_alpha_infeasible_targets():
    with pytest.raises(ProfileError, match="straddle"):
        build_alpha(H1, LAM, -1, 3, 1.5, 1.2)
    with pytest.raises(ProfileError, match="infeasible"):
        build_alpha(H1, LAM, -0.1, 0.5, 1.5, 0.5)


def test_beta_basic(beta):
    assert beta(0.0) == 1.0
    assert beta(H2) == 0.0 and beta(-H2) == 0.0
    t = np.random.default_rng(0).uniform(-H2, H2, 10_000)
    assert np.array_equal(beta.value(t), beta.value(-t))
    v = beta.value(np.linspace(-1.2 * H2, 1.2 * H2, 100_001))
    assert v.min() >= 0 and v.max() <= 1
    w = beta.plateau_half_width
    p = np.linspace(-w, w, 101)
    assert np.all(beta.value(p) == 1.0) and np.all(beta.derivative(p) == 0.0)


def test_beta_slope_bound(beta):
    d = beta.derivative(np.linspace(-H2, H2, 100_001))
    assert np.abs(d).max() < 3 / (2 * H2)


def test_beta_rejects_wide_plateau():
    with pytest.raises(ProfileError, match="unachievable"):
        build_beta(1.0, 0.5)
    with pytest.raises(ProfileError):
        build_beta(1.0, 1.5)


def test_shear_profile():
    s = build_shear(0.002, 0.01)
    assert s(0.0) == pytest.approx(0.01 * 0.002)
    assert s(0.002) == 0.0


@pytest.mark.parametrize("which", ["alpha", "beta"])
def test_derivative_matches_finite_differences(which, alpha, beta):
    p = alpha if which == "alpha" else beta
    h = p.half_support
    t = np.random.default_rng(4).uniform(-h, h, 10_000)
    dt = 1e-6 * h
    fd = (p.value(t + dt) - p.value(t - dt)) / (2 * dt)
    an = p.derivative(t)
    scale = np.abs(an).max()
    assert np.max(np.abs(fd - an)) / scale < 1e-6


def test_validate_profiles(alpha, beta):
    rep = validate_profiles(alpha, beta, DEMO_EPS, MU)
    assert rep.passed, rep.failures()
    bad = build_alpha(2 * H1, LAM, LAM * LAM - LAM, math.sqrt(MU) - LAM, 1.5, 0.5)
    rep = validate_profiles(bad, beta, DEMO_EPS, MU)
    assert [c["name"] for c in rep.failures()][0] == "length_ratio"
