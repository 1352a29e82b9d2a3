"""Compactly supported bump profiles used by the DA surgery.

Both profiles are piecewise: on each segment of [0, half_support] the
derivative blends between two constant slopes with the quintic smoothstep
S(t) = 10t^3 - 15t^4 + 6t^5, so derivative and value are closed form.  A
constant segment is a blend whose end slopes coincide.  The ramp is odd
and the plateau bump is even; both are evaluated through |t| and a sign,
which makes the parity exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

N_SCAN = 100_000


def _smoothstep(t):
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def _smoothstep_integral(t):
    # integral of S from 0 to t; equals 1/2 at t = 1
    return t ** 4 * (2.5 - 3.0 * t + t * t)


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class Profile:
    half_support: float
    knots: tuple  # segment boundaries, knots[0] = 0, knots[-1] = half_support
    slope_start: tuple
    slope_end: tuple
    value_start: tuple
    parity: int  # +1 even, -1 odd

    def _locate(self, r):
        k = np.searchsorted(np.asarray(self.knots), r, side="right") - 1
        return np.clip(k, 0, len(self.slope_start) - 1)

    def _eval_abs(self, r):
        xs = np.asarray(self.knots)
        sa = np.asarray(self.slope_start)
        sb = np.asarray(self.slope_end)
        v0 = np.asarray(self.value_start)
        k = self._locate(r)
        L = xs[k + 1] - xs[k]
        dx = r - xs[k]
        tau = dx / L
        dv = sa[k] * dx + (sb[k] - sa[k]) * L * _smoothstep_integral(tau)
        val = v0[k] + dv
        der = sa[k] + (sb[k] - sa[k]) * _smoothstep(tau)
        outside = r >= self.half_support
        val = np.where(outside, 0.0, val)
        der = np.where(outside, 0.0, der)
        return val, der

    def value(self, t):
        t = np.asarray(t, dtype=float)
        val, _ = self._eval_abs(np.abs(t))
        if self.parity < 0:
            val = np.where(t < 0, -val, val)
        return val if val.ndim else float(val)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        _, der = self._eval_abs(np.abs(t))
        if self.parity > 0:
            der = np.where(t < 0, -der, der)
        return der if der.ndim else float(der)

    __call__ = value

    def slope_extremes(self) -> tuple[float, float]:
        """Exact min/max of the derivative (smoothstep blends are monotone)."""
        s = list(self.slope_start) + list(self.slope_end)
        if self.parity > 0:
            s += [-x for x in s]
        return min(s), max(s)

    def max_abs_value(self) -> float:
        # |value| peaks where the derivative changes sign; sample densely
        t = np.linspace(0.0, self.half_support, N_SCAN + 1)
        return float(np.max(np.abs(self.value(t))))

    def as_dict(self) -> dict:
        return {
            "half_support": self.half_support,
            "knots": list(self.knots),
            "slope_start": list(self.slope_start),
            "slope_end": list(self.slope_end),
            "value_start": list(self.value_start),
            "parity": self.parity,
        }


def _assemble(knots, slopes_a, slopes_b, v_init):
    values = [v_init]
    for k in range(len(slopes_a) - 1):
        L = knots[k + 1] - knots[k]
        values.append(values[-1] + 0.5 * (slopes_a[k] + slopes_b[k]) * L)
    return tuple(values)


@dataclass(frozen=True)
class OddRamp(Profile):
    base_slope: float = 0.0
    slope_lo: float = -math.inf
    slope_hi: float = math.inf
    slope_at_zero: float = 0.0
    slope_at_flip: float = 0.0
    flip_points: tuple = (0.0, 0.0)
    plateau_half_width: float = 0.0

    def fixed_map_residual(self, t):
        """(alpha + base*id)(t) - t; zeros are the fixed points of the 1-D map."""
        t = np.asarray(t, dtype=float)
        return self.value(t) + (self.base_slope - 1.0) * t


@dataclass(frozen=True)
class PlateauBump(Profile):
    plateau_half_width: float = 0.0
    slope_bound: float = field(default=math.inf)


def build_alpha(
    half_support: float,
    lam: float,
    slope_lo: float,
    slope_hi: float,
    deriv_at_zero_target: float,
    deriv_at_flip_target: float,
    plateau_fraction: float = 1 / 128,
    blend_fraction: float = 1 / 128,
    return_fraction: float = 1 / 64,
    tail_fraction: float = 1 / 16,
) -> OddRamp:
    """Odd ramp alpha with lam + alpha'(0) and lam + alpha'(+-s) prescribed.

    ``lam`` is the slope of the linear map being surgered, so the 1-D map
    t -> lam*t + alpha(t) keeps 0 fixed and gains fixed points at +-s.  The
    two targets must lie on opposite sides of 1.  alpha' is constant on
    [-w, w] and on [s - w, s + w] with w = plateau_fraction * half_support.
    """
    h = float(half_support)
    D0, Ds = float(deriv_at_zero_target), float(deriv_at_flip_target)
    if h <= 0:
        raise ProfileError("half_support must be positive")
    if (D0 - 1.0) * (Ds - 1.0) >= 0:
        raise ProfileError(f"targets {D0} and {Ds} must straddle 1")
    s0, ss = D0 - lam, Ds - lam
    for name, v in (("alpha'(0)", s0), ("alpha'(s)", ss), ("alpha' at support edge", 0.0)):
        if not slope_lo < v < slope_hi:
            raise ProfileError(f"infeasible slope target: {slope_lo} < {name} = {v} < {slope_hi} violated")

    w = plateau_fraction * h
    L01 = blend_fraction * h
    L4 = return_fraction * h
    L6 = tail_fraction * h
    # alpha(s) = (1 - lam) s with s = c0 + L01 + w
    c0 = -((0.5 * (D0 + Ds) - 1.0) * L01 + (Ds - 1.0) * w) / (D0 - 1.0)
    if c0 <= 0:
        raise ProfileError("no room for the plateau at zero with these targets")
    s = c0 + L01 + w
    P = (1.0 - lam) * s + ss * w
    Lc = h - (s + w) - L4 - L6
    if Lc <= 0:
        raise ProfileError("support too small to fit the plateaus")
    sn = -(P + 0.5 * ss * L4) / (0.5 * L4 + Lc + 0.5 * L6)
    if not slope_lo < sn < slope_hi:
        raise ProfileError(
            f"infeasible slope targets: return slope {sn} outside ({slope_lo}, {slope_hi})"
        )
    knots = [0.0, c0, c0 + L01, s + w, s + w + L4, h - L6, h]
    sa = [s0, s0, ss, ss, sn, sn]
    sb = [s0, ss, ss, sn, sn, 0.0]
    vals = _assemble(knots, sa, sb, 0.0)
    # value at s from the plateau segment
    alpha_s = vals[2] + ss * (s - knots[2])
    if abs(alpha_s + lam * s - s) > 1e-12 * max(s, 1e-300) + 1e-300:
        raise ProfileError("flip point does not close up")
    return OddRamp(
        half_support=h,
        knots=tuple(knots),
        slope_start=tuple(sa),
        slope_end=tuple(sb),
        value_start=vals,
        parity=-1,
        base_slope=lam,
        slope_lo=slope_lo,
        slope_hi=slope_hi,
        slope_at_zero=s0,
        slope_at_flip=ss,
        flip_points=(-s, s),
        plateau_half_width=w,
    )


def build_beta(half_support: float, plateau_half_width: float, ramp_fraction: float = 0.2) -> PlateauBump:
    """Even bump, 1 on the plateau and 0 outside (-half_support, half_support).

    The shoulder slope follows a smoothed trapezoid, so its peak is
    1 / ((1 - ramp_fraction) * shoulder_length).  Rejects parameters whose
    peak slope reaches 3 / (2 * half_support).
    """
    h, w = float(half_support), float(plateau_half_width)
    if not 0 < w < h:
        raise ProfileError("need 0 < plateau_half_width < half_support")
    Ls = h - w
    c = 1.0 / ((1.0 - ramp_fraction) * Ls)
    bound = 3.0 / (2.0 * h)
    if c >= bound:
        raise ProfileError(
            f"slope bound 3/l(I2) = {bound} unachievable: shoulder peak slope {c} (plateau too wide)"
        )
    r = ramp_fraction * Ls
    knots = [0.0, w, w + r, h - r, h]
    sa = [0.0, 0.0, -c, -c]
    sb = [0.0, -c, -c, 0.0]
    vals = _assemble(knots, sa, sb, 1.0)
    return PlateauBump(
        half_support=h,
        knots=tuple(knots),
        slope_start=tuple(sa),
        slope_end=tuple(sb),
        value_start=vals,
        parity=1,
        plateau_half_width=w,
        slope_bound=bound,
    )


def build_shear(half_support: float, amplitude: float, plateau_fraction: float = 0.1) -> Profile:
    """Even bump scaled so that its value peaks at amplitude * half_support."""
    b = build_beta(half_support, plateau_fraction * half_support)
    k = amplitude * half_support
    return Profile(
        half_support=b.half_support,
        knots=b.knots,
        slope_start=tuple(k * x for x in b.slope_start),
        slope_end=tuple(k * x for x in b.slope_end),
        value_start=tuple(k * x for x in b.value_start),
        parity=1,
    )


def count_fixed_points(alpha: OddRamp, n: int = N_SCAN) -> int:
    """Brute-force count of zeros of alpha(t) + (base - 1) t over I1."""
    t = np.linspace(-alpha.half_support, alpha.half_support, n + 1)
    g = np.sign(alpha.fixed_map_residual(t))
    zeros = int(np.count_nonzero(g == 0))
    changes = int(np.count_nonzero(g[:-1] * g[1:] < 0))
    return zeros + changes


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    def add(self, name, passed, value, bound):
        self.checks.append({"name": name, "passed": bool(passed), "value": float(value), "bound": float(bound)})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c["passed"]]


def validate_profiles(alpha: OddRamp, beta: PlateauBump, eps: float, mu: float) -> ValidationReport:
    rep = ValidationReport()
    l1, l2 = 2 * alpha.half_support, 2 * beta.half_support
    target = eps / (3 * mu) * l2
    rep.add("length_ratio", abs(l1 - target) <= 1e-12 * target, abs(l1 - target) / target, 1e-12)

    t1 = np.linspace(-alpha.half_support, alpha.half_support, N_SCAN + 1)
    t2 = np.linspace(-beta.half_support, beta.half_support, N_SCAN + 1)
    amax = float(np.max(np.abs(alpha.value(t1))))
    bpmax = float(np.max(np.abs(beta.derivative(t2))))
    rep.add("product_bound", amax * bpmax < eps, amax * bpmax, eps)

    da = alpha.derivative(t1)
    lo_s, hi_s = alpha.slope_extremes()
    rep.add("alpha_slope_lo", min(float(da.min()), lo_s) > alpha.slope_lo, min(float(da.min()), lo_s), alpha.slope_lo)
    rep.add("alpha_slope_hi", max(float(da.max()), hi_s) < alpha.slope_hi, max(float(da.max()), hi_s), alpha.slope_hi)
    rep.add("beta_slope", bpmax < beta.slope_bound, bpmax, beta.slope_bound)
    n_fix = count_fixed_points(alpha)
    rep.add("fixed_point_count", n_fix == 3, n_fix, 3)
    return rep
