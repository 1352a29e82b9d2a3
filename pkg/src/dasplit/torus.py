"""Torus arithmetic and the linear Anosov model f_A.

Points of T^2 = R^2/Z^2 are stored in [0, 1)^2; lifted points are plain
pairs of reals in the universal cover.  Directions are projective angles in
[0, pi) measured in the standard (x1, x2) coordinates of the torus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

CHART_RADIUS = 0.25


class TorusPoint(NamedTuple):
    x1: float
    x2: float


class LiftedPoint(NamedTuple):
    x1: float
    x2: float


@dataclass(frozen=True)
class Direction:
    """Projective direction; theta and theta + pi are the same line."""

    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError("direction angle must be finite")
        object.__setattr__(self, "theta", math.fmod(self.theta, math.pi) % math.pi)

    @classmethod
    def from_vector(cls, v) -> "Direction":
        return cls(math.atan2(v[1], v[0]))

    def unit(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta)])


def _reduce(x: float) -> float:
    r = x - math.floor(x)
    # x = -tiny rounds to 1.0
    return 0.0 if r >= 1.0 else r


def wrap(p) -> TorusPoint:
    x1, x2 = float(p[0]), float(p[1])
    if not (math.isfinite(x1) and math.isfinite(x2)):
        raise ValueError(f"non-finite coordinates {p!r}")
    return TorusPoint(_reduce(x1), _reduce(x2))


def wrap_array(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite coordinates")
    R = X - np.floor(X)
    R[R >= 1.0] = 0.0
    return R


def nearest_offset(p, q) -> np.ndarray:
    """Shortest lifted displacement q - p."""
    d = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
    return d - np.round(d)


def torus_distance(p, q) -> float:
    if not all(math.isfinite(float(c)) for c in (*p, *q)):
        raise ValueError("non-finite coordinates")
    d = nearest_offset(p, q)
    return float(math.hypot(d[0], d[1]))


def torus_distance_array(P: np.ndarray, q) -> np.ndarray:
    d = np.asarray(q, dtype=float) - np.asarray(P, dtype=float)
    d -= np.round(d)
    return np.hypot(d[..., 0], d[..., 1])


def angle_between(d1: Direction, d2: Direction) -> float:
    """Acute angle in [0, pi/2] between two lines."""
    t = abs(d1.theta - d2.theta) % math.pi
    return min(t, math.pi - t)


def operator_norm(J) -> float:
    """Largest singular value of a 2x2 matrix."""
    a, b, c, d = float(J[0][0]), float(J[0][1]), float(J[1][0]), float(J[1][1])
    s = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = math.sqrt(max(s * s / 4.0 - det * det, 0.0))
    return math.sqrt(s / 2.0 + disc)


def operator_norm_array(J: np.ndarray) -> np.ndarray:
    a, b, c, d = J[..., 0, 0], J[..., 0, 1], J[..., 1, 0], J[..., 1, 1]
    s = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = np.sqrt(np.maximum(s * s / 4.0 - det * det, 0.0))
    return np.sqrt(s / 2.0 + disc)


@dataclass(frozen=True)
class ToralAutomorphism:
    """Symmetric hyperbolic automorphism with its orthonormal eigen-frame.

    ``frame`` has e_s as first column and e_u as second, so that the matrix
    reads diag(lam, mu) in eigen coordinates.
    """

    A: tuple
    lam: float
    mu: float
    e_s: Direction
    e_u: Direction
    frame: np.ndarray = field(repr=False, compare=False)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.A, dtype=float)

    def inverse(self) -> "ToralAutomorphism":
        (a, b), (c, d) = self.A
        Ainv = ((d, -b), (-c, a))
        frame = self.frame[:, ::-1].copy()
        return ToralAutomorphism(Ainv, self.lam, self.mu, self.e_u, self.e_s, frame)

    def apply(self, p) -> TorusPoint:
        (a, b), (c, d) = self.A
        return wrap((a * p[0] + b * p[1], c * p[0] + d * p[1]))

    def to_eigen_frame(self, x, center) -> tuple[float, float]:
        d = nearest_offset(center, x)
        if math.hypot(d[0], d[1]) >= CHART_RADIUS:
            raise ValueError("point outside the eigen-frame chart radius")
        u = self.frame.T @ d
        return float(u[0]), float(u[1])

    def from_eigen_frame(self, u1: float, u2: float, center) -> LiftedPoint:
        d = self.frame @ np.array([u1, u2])
        return LiftedPoint(float(center[0] + d[0]), float(center[1] + d[1]))


def _eigen_model(A: tuple) -> ToralAutomorphism:
    (a, b), (c, d) = A
    if a * d - b * c != 1 or b != c:
        raise ValueError("need a symmetric integer matrix with det 1")
    tr = a + d
    if tr <= 2:
        raise ValueError("matrix is not hyperbolic")
    mu = (tr + math.sqrt(tr * tr - 4)) / 2.0
    lam = 1.0 / mu
    # eigenvector for mu: (b, mu - a); for lam: orthogonal
    vu = np.array([b, mu - a], dtype=float)
    vu /= np.hypot(*vu)
    if vu[0] < 0:
        vu = -vu
    vs = np.array([vu[1], -vu[0]])
    frame = np.column_stack([vs, vu])
    return ToralAutomorphism(A, lam, mu, Direction.from_vector(vs), Direction.from_vector(vu), frame)


def linear_model() -> ToralAutomorphism:
    """The square of the cat matrix [[2,1],[1,1]]."""
    return _eigen_model(((5, 3), (3, 2)))


def fixed_points_exact(m: ToralAutomorphism) -> list[tuple[Fraction, Fraction]]:
    """Fixed points of f_A as exact rationals."""
    (a, b), (c, d) = m.A
    det = (a - 1) * (d - 1) - b * c
    if det == 0:
        raise ValueError("A - I is singular; fixed points are not isolated")
    n = abs(det)
    out = []
    # (A - I)x in Z^2 forces x in (1/n) Z^2
    for i in range(n):
        for j in range(n):
            x = (Fraction(i, n), Fraction(j, n))
            if ((a - 1) * x[0] + b * x[1]).denominator == 1 and (c * x[0] + (d - 1) * x[1]).denominator == 1:
                out.append(x)
    return out


def fixed_points_of_linear(m: ToralAutomorphism) -> list[TorusPoint]:
    return [TorusPoint(float(x), float(y)) for x, y in fixed_points_exact(m)]
