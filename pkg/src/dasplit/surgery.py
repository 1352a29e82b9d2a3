"""DA charts and the composed torus diffeomorphisms built from them.

A chart lives in an orthonormal frame at a fixed point of f_A where the
linear model reads diag(l1, l2).  The chart map is triangular:

    first_da / shear:  (u1, u2) -> (l1*u1 + A(u1) B(u2), l2*u2)
    second_da:         (v1, v2) -> (a_q*v1, l2*v2 + A(v2) B(v1))

A second_da chart is nested inside a first_da chart, centred at the flip
point q where the first chart is affine.  An ``inverse`` oriented chart
describes f^{-1} near its centre, so f itself is evaluated there by
inverting the chart map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import kernels
from .profiles import OddRamp, PlateauBump, Profile, build_alpha, build_beta, build_shear
from .torus import (
    CHART_RADIUS,
    LiftedPoint,
    ToralAutomorphism,
    TorusPoint,
    fixed_points_exact,
    linear_model,
    nearest_offset,
    operator_norm_array,
    torus_distance,
    wrap,
    wrap_array,
)

STRICT_EPS = 9e-4
DEMO_EPS = 5e-3
DEFAULT_DELTA = 9e-4
MAX_INVERT_ITER = 200


class SurgeryError(ValueError):
    pass


class JacobianAtPoint(NamedTuple):
    a: float
    b: float
    c: float
    d: float

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])


@dataclass(frozen=True)
class SurgeryParams:
    source_target: float = 1.5
    flip_target: float = 0.5
    sink_target: float = 0.85
    inner_flip_target: float = 2.0
    eta: float = 1.6
    box_fraction: float = 0.8
    beta_plateau_fraction: float = 0.1
    inner_box_fraction: float = 0.8
    inner_beta_plateau_fraction: float = 0.1
    alpha_plateau_fraction: float = 1 / 128
    alpha_blend_fraction: float = 1 / 128

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class DaChart:
    center: tuple  # exact rationals (Fraction, Fraction) for fixed-point sites
    frame: np.ndarray = field(repr=False, compare=False)
    kind: str = "first_da"  # first_da | second_da | shear
    orientation: str = "forward"  # forward | inverse
    alpha: Profile | None = None
    beta: PlateauBump | None = None
    eps: float = 0.0
    lin: tuple = (0.0, 0.0)  # diagonal of the linear part in chart coordinates
    inner: "DaChart | None" = None
    inner_center_offset: tuple = (0.0, 0.0)

    @property
    def center_float(self) -> TorusPoint:
        return TorusPoint(float(self.center[0]), float(self.center[1]))

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "second_da":
            return (self.beta.half_support, self.alpha.half_support)
        return (self.alpha.half_support, self.beta.half_support)

    @property
    def image_box(self) -> tuple[float, float]:
        h1, h2 = self.support
        return (abs(self.lin[0]) * h1, abs(self.lin[1]) * h2)

    def modified_radius(self) -> float:
        """Radius of a disc around the centre containing everything this chart changes."""
        h1, h2 = self.support
        r1, r2 = self.image_box
        return math.hypot(max(h1, r1), max(h2, r2))

    def flipped(self) -> "DaChart":
        o = "inverse" if self.orientation == "forward" else "forward"
        return replace(self, orientation=o)


def da_chart_eval(chart: DaChart, u) -> np.ndarray:
    """Chart map in chart coordinates (nested second chart included)."""
    u = np.asarray(u, dtype=float)
    if np.any(np.hypot(u[..., 0], u[..., 1]) >= CHART_RADIUS):
        raise SurgeryError("chart-radius violation")
    out = _chart_eval(chart, u)
    if chart.inner is not None:
        q = np.asarray(chart.inner_center_offset)
        v = u - q
        k1, k2 = chart.inner.support
        inside = (np.abs(v[..., 0]) <= k1) & (np.abs(v[..., 1]) <= k2)
        if np.any(inside):
            out = np.where(inside[..., None], q + _chart_eval(chart.inner, v), out)
    return out


def _chart_eval(chart, u):
    l1, l2 = chart.lin
    u1, u2 = u[..., 0], u[..., 1]
    if chart.kind == "second_da":
        y1 = l1 * u1
        y2 = l2 * u2 + chart.alpha.value(u2) * chart.beta.value(u1)
    else:
        y1 = l1 * u1 + chart.alpha.value(u1) * chart.beta.value(u2)
        y2 = l2 * u2
    return np.stack([np.broadcast_to(y1, u1.shape), np.broadcast_to(y2, u2.shape)], axis=-1)


def _chart_jac(chart, u):
    l1, l2 = chart.lin
    u1, u2 = u[..., 0], u[..., 1]
    J = np.zeros(u.shape[:-1] + (2, 2))
    if chart.kind == "second_da":
        J[..., 0, 0] = l1
        J[..., 1, 0] = chart.alpha.value(u2) * chart.beta.derivative(u1)
        J[..., 1, 1] = l2 + chart.alpha.derivative(u2) * chart.beta.value(u1)
    else:
        J[..., 0, 0] = l1 + chart.alpha.derivative(u1) * chart.beta.value(u2)
        J[..., 0, 1] = chart.alpha.value(u1) * chart.beta.derivative(u2)
        J[..., 1, 1] = l2
    return J


def da_chart_jacobian(chart: DaChart, u) -> np.ndarray:
    """Analytic Jacobian of the chart map, chart coordinates, shape (..., 2, 2)."""
    u = np.asarray(u, dtype=float)
    if np.any(np.hypot(u[..., 0], u[..., 1]) >= CHART_RADIUS):
        raise SurgeryError("chart-radius violation")
    J = _chart_jac(chart, u)
    if chart.inner is not None:
        q = np.asarray(chart.inner_center_offset)
        v = u - q
        k1, k2 = chart.inner.support
        inside = (np.abs(v[..., 0]) <= k1) & (np.abs(v[..., 1]) <= k2)
        if np.any(inside):
            J = np.where(inside[..., None, None], _chart_jac(chart.inner, v), J)
    return J


def _solve_monotone(g, dg, target, lo, hi):
    """Safeguarded Newton for an increasing scalar g on [lo, hi]."""
    x = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    w1 = w2 = np.inf
    for _ in range(MAX_INVERT_ITER):
        r = g(x) - target
        if r == 0.0:
            return x
        if r > 0:
            hi = x
        else:
            lo = x
        d = dg(x)
        xn = x - r / d if d > 0 else 0.5 * (lo + hi)
        if not lo < xn < hi or hi - lo > 0.5 * w2:
            xn = 0.5 * (lo + hi)
        w1, w2 = hi - lo, w1
        eps = np.finfo(float).eps
        if abs(xn - x) <= 4 * eps * max(abs(x), abs(xn)) or hi - lo <= 4 * eps * max(abs(lo), abs(hi)) \
                or hi - lo <= eps * h:
            return xn
        x = xn
    raise SurgeryError("chart inversion did not converge (corrupted chart?)")


def _chart_invert(chart, w):
    l1, l2 = chart.lin
    w1, w2 = float(w[0]), float(w[1])
    A, B = chart.alpha, chart.beta
    if chart.kind == "second_da":
        v1 = w1 / l1
        b = B.value(v1)
        h = A.half_support
        if b == 0.0 or abs(w2) >= l2 * h:
            return np.array([v1, w2 / l2])
        v2 = _solve_monotone(lambda t: l2 * t + A.value(t) * b, lambda t: l2 + A.derivative(t) * b, w2, -h, h)
        return np.array([v1, v2])
    u2 = w2 / l2
    b = B.value(u2)
    h = A.half_support
    if b == 0.0 or abs(w1) >= l1 * h:
        return np.array([w1 / l1, u2])
    u1 = _solve_monotone(lambda t: l1 * t + A.value(t) * b, lambda t: l1 + A.derivative(t) * b, w1, -h, h)
    return np.array([u1, u2])


def da_chart_invert(chart: DaChart, w) -> np.ndarray:
    """Inverse of the chart map (nested chart included); w has shape (2,) or (N, 2)."""
    w = np.asarray(w, dtype=float)
    if w.ndim == 2:
        return np.array([da_chart_invert(chart, x) for x in w])
    if chart.inner is not None:
        q = np.asarray(chart.inner_center_offset)
        r1, r2 = chart.inner.image_box
        z = w - q
        if abs(z[0]) <= r1 and abs(z[1]) <= r2:
            return q + _chart_invert(chart.inner, z)
    return _chart_invert(chart, w)


@dataclass(frozen=True, eq=False)
class ComposedDiffeo:
    base: ToralAutomorphism
    charts: tuple = ()
    label: str = ""
    mode: str = "demo"
    eps: float = 0.0
    delta: float = DEFAULT_DELTA
    params: SurgeryParams = field(default_factory=SurgeryParams)

    def __post_init__(self):
        cs = self.charts
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                d = torus_distance(cs[i].center_float, cs[j].center_float)
                if d <= cs[i].modified_radius() + cs[j].modified_radius():
                    raise SurgeryError(f"modified regions of charts {i} and {j} overlap")

    @cached_property
    def table(self):
        return kernels.build_table(self)

    def inverse(self) -> "ComposedDiffeo":
        return ComposedDiffeo(
            self.base.inverse(),
            tuple(c.flipped() for c in self.charts),
            label=self.label + " (inverse)",
            mode=self.mode,
            eps=self.eps,
            delta=self.delta,
            params=self.params,
        )

    def _chart_R(self, chart: DaChart) -> np.ndarray:
        return self.base.frame.T @ chart.frame

    # lifted, vectorised API used internally
    def step(self, X) -> np.ndarray:
        return kernels.backend.step(self.table, np.atleast_2d(np.asarray(X, dtype=float)))

    def step_inverse(self, X) -> np.ndarray:
        return kernels.backend.step_inverse(self.table, np.atleast_2d(np.asarray(X, dtype=float)))

    def jacobians(self, X) -> np.ndarray:
        """Df in the global eigen-frame at lifted points, shape (N, 2, 2)."""
        return kernels.backend.jacobian(self.table, np.atleast_2d(np.asarray(X, dtype=float)))

    def in_modified_region(self, X) -> np.ndarray:
        return kernels.in_modified_region(self.table, np.atleast_2d(np.asarray(X, dtype=float)))

    # torus-point API
    def evaluate(self, x) -> TorusPoint:
        return wrap(self.step(np.asarray(x, dtype=float))[0])

    def evaluate_inverse(self, x) -> TorusPoint:
        return wrap(self.step_inverse(np.asarray(x, dtype=float))[0])

    def jacobian(self, x) -> JacobianAtPoint:
        J = self.jacobians(np.asarray(x, dtype=float))[0]
        return JacobianAtPoint(float(J[0, 0]), float(J[0, 1]), float(J[1, 0]), float(J[1, 1]))

    def evaluate_array(self, X) -> np.ndarray:
        return wrap_array(self.step(X))

    def evaluate_inverse_array(self, X) -> np.ndarray:
        return wrap_array(self.step_inverse(X))

    def site(self, index: int = 0) -> DaChart:
        return self.charts[index]

    def chart_to_lift(self, chart: DaChart, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.asarray(chart.center_float) + u @ chart.frame.T

    def lift_to_chart(self, chart: DaChart, X) -> np.ndarray:
        d = np.asarray(X, dtype=float) - np.asarray(chart.center_float)
        d = d - np.round(d)
        return d @ chart.frame


def _frac_pair(p) -> tuple:
    return (Fraction(p[0]), Fraction(p[1]))


def make_first_chart(base: ToralAutomorphism, eps: float, params: SurgeryParams, center, orientation="forward",
                     with_inner=False) -> DaChart:
    lam, mu = base.lam, base.mu
    frame = base.frame if orientation == "forward" else base.inverse().frame
    h2 = params.box_fraction * eps
    h1 = eps / (3.0 * mu) * h2
    alpha = build_alpha(
        h1, lam, lam * lam - lam, math.sqrt(mu) - lam, params.source_target, params.flip_target,
        plateau_fraction=params.alpha_plateau_fraction, blend_fraction=params.alpha_blend_fraction,
    )
    beta = build_beta(h2, params.beta_plateau_fraction * h2)
    chart = DaChart(
        center=_frac_pair(center), frame=frame, kind="first_da", orientation=orientation,
        alpha=alpha, beta=beta, eps=eps, lin=(lam, mu),
    )
    if not with_inner:
        return chart
    s = alpha.flip_points[1]
    a_q = lam + float(alpha.derivative(s))
    k1 = params.inner_box_fraction * alpha.plateau_half_width
    k2 = eps / (3.0 * mu) * k1
    alpha2 = build_alpha(
        k2, mu, params.eta * a_q - mu, mu, params.sink_target, params.inner_flip_target,
        plateau_fraction=params.alpha_plateau_fraction, blend_fraction=params.alpha_blend_fraction,
    )
    beta2 = build_beta(k1, params.inner_beta_plateau_fraction * k1)
    if mu * k2 >= beta.plateau_half_width:
        raise SurgeryError("second surgery does not fit inside the affine neighbourhood of q")
    inner = DaChart(
        center=chart.center, frame=frame, kind="second_da", orientation=orientation,
        alpha=alpha2, beta=beta2, eps=eps, lin=(a_q, mu),
    )
    return replace(chart, inner=inner, inner_center_offset=(s, 0.0))


def make_shear_chart(base: ToralAutomorphism, center, radius: float, magnitude: float) -> DaChart:
    """Perturbation (u1, u2) -> (lam*u1 + m r B(u1/r) B(u2/r) / 1.5, mu*u2)."""
    amp = magnitude / 1.5
    A = build_shear(radius, amp)
    B = build_beta(radius, 0.1 * radius)
    c = (Fraction(center[0]).limit_denominator(10 ** 12), Fraction(center[1]).limit_denominator(10 ** 12))
    return DaChart(center=c, frame=base.frame, kind="shear", orientation="forward",
                   alpha=A, beta=B, eps=magnitude, lin=(base.lam, base.mu))


def eps_for_mode(mode: str) -> float:
    if mode == "strict":
        return STRICT_EPS
    if mode == "demo":
        return DEMO_EPS
    raise SurgeryError(f"unknown mode {mode!r}")


def build_linear_map() -> ComposedDiffeo:
    return ComposedDiffeo(linear_model(), (), label="linear", mode="linear", eps=0.0)


def build_single_da(eps: float = DEMO_EPS, params: SurgeryParams | None = None, center=(0, 0)) -> ComposedDiffeo:
    """f_A with one DA surgery (source plus two saddles)."""
    params = params or SurgeryParams()
    base = linear_model()
    chart = make_first_chart(base, eps, params, center)
    return ComposedDiffeo(base, (chart,), label="single-da", eps=eps, params=params)


def build_example_map(eps: float | None = None, delta: float = DEFAULT_DELTA, params: SurgeryParams | None = None,
                      mode: str | None = None) -> ComposedDiffeo:
    """Double DA at p = (0, 0): source p, sink q, saddle q'."""
    params = params or SurgeryParams()
    eps = eps_for_mode(mode or "demo") if eps is None else eps
    _check_eps(eps)
    base = linear_model()
    chart = make_first_chart(base, eps, params, (0, 0), with_inner=True)
    mode = mode or _mode_of(eps)
    return ComposedDiffeo(base, (chart,), label="example", mode=mode, eps=eps, delta=delta, params=params)


def build_theorem_map(eps: float | None = None, params: SurgeryParams | None = None, p1=(0, 0),
                      p2=(Fraction(1, 5), Fraction(2, 5)), delta: float = DEFAULT_DELTA,
                      mode: str | None = None) -> ComposedDiffeo:
    """Double DA for f at p1 and the same double DA for f^{-1} at p2."""
    params = params or SurgeryParams()
    eps = eps_for_mode(mode or "demo") if eps is None else eps
    _check_eps(eps)
    base = linear_model()
    fixed = set(fixed_points_exact(base))
    for p in (p1, p2):
        if _frac_pair(p) not in fixed:
            raise SurgeryError(f"{p} is not a fixed point of f_A")
    if _frac_pair(p1) == _frac_pair(p2):
        raise SurgeryError("p1 and p2 must be distinct")
    c1 = make_first_chart(base, eps, params, p1, with_inner=True)
    c2 = make_first_chart(base, eps, params, p2, orientation="inverse", with_inner=True)
    mode = mode or _mode_of(eps)
    return ComposedDiffeo(base, (c1, c2), label="theorem", mode=mode, eps=eps, delta=delta, params=params)


def perturbed(f: ComposedDiffeo, center, radius: float, magnitude: float) -> ComposedDiffeo:
    """f with an extra shear chart; magnitude 0 returns f itself."""
    if magnitude == 0:
        return f
    chart = make_shear_chart(f.base, center, radius, magnitude)
    return ComposedDiffeo(f.base, f.charts + (chart,), label=f.label + "+shear", mode=f.mode,
                          eps=f.eps, delta=f.delta, params=f.params)


def _mode_of(eps: float) -> str:
    return "strict" if eps < 1e-3 else "demo"


def _check_eps(eps: float):
    if not eps > 0:
        raise SurgeryError("eps must be positive")
    # cheap a-priori form of 2 eps ||Df|| < 1/10 using ||Df|| >= mu
    if 2 * eps * linear_model().mu >= 0.1:
        raise SurgeryError(f"eps = {eps} violates 2 eps ||Df|| < 1/10")


def stratified_points(f: ComposedDiffeo, n_outer: int, n_chart: int, n_inner: int, rng) -> np.ndarray:
    """Random lifted points: uniform on the torus plus uniform in every chart box."""
    pts = [rng.random((n_outer, 2))]
    for ch in f.charts:
        boxes = [(ch.support, (0.0, 0.0), n_chart), (ch.image_box, (0.0, 0.0), n_chart)]
        if ch.inner is not None:
            q = ch.inner_center_offset
            boxes += [(ch.inner.support, q, n_inner), (ch.inner.image_box, q, n_inner)]
        for (b1, b2), off, n in boxes:
            u = (rng.random((n, 2)) * 2 - 1) * np.array([b1, b2]) + np.asarray(off)
            pts.append(f.chart_to_lift(ch, u))
    return np.concatenate(pts)


def sup_norm_Df(f: ComposedDiffeo, grid_n: int = 64, refine: int = 4) -> tuple[float, float]:
    """Grid estimate of sup ||Df|| with its torus grid spacing."""
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    g = (np.arange(grid_n) + 0.5) / grid_n
    X = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    best = float(operator_norm_array(f.jacobians(X)).max())
    m = refine * grid_n
    for ch in f.charts:
        for box, off in _chart_boxes(ch):
            U = _box_grid(box, off, m)
            best = max(best, float(operator_norm_array(f.jacobians(f.chart_to_lift(ch, U))).max()))
    return best, 1.0 / grid_n


def _chart_boxes(ch: DaChart):
    out = [(ch.support, (0.0, 0.0)), (ch.image_box, (0.0, 0.0))]
    if ch.inner is not None:
        q = ch.inner_center_offset
        out += [(ch.inner.support, q), (ch.inner.image_box, q)]
    return out


def _box_grid(box, off, m):
    t1 = np.linspace(-box[0], box[0], m) + off[0]
    t2 = np.linspace(-box[1], box[1], m) + off[1]
    return np.stack(np.meshgrid(t1, t2, indexing="ij"), -1).reshape(-1, 2)
