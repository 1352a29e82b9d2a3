"""Fixed points, sink basins, strong manifolds and integral curves of E and F.

Points are handled as lifted numpy arrays.  Near a surgery site all the
interesting structure lives at scales of 1e-8 down to 1e-13, so every
routine keeps its points on a lift close to the relevant fixed point
instead of wrapping into [0, 1)^2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .splitting import DEFAULT_N, DEFAULT_TOL, bundle_vectors
from .surgery import ComposedDiffeo, JacobianAtPoint, _box_grid, _chart_boxes
from .torus import LiftedPoint, TorusPoint, wrap

NEWTON_MAX = 50
MERGE_RADIUS = 1e-8
VERIFY_TOL = 1e-11
N_MAX_VERIFY = 40
SINK_CONTRACTION = 0.85


class DynamicsError(RuntimeError):
    pass


@dataclass(frozen=True)
class FixedPointRecord:
    location: TorusPoint
    lift: LiftedPoint
    jacobian: JacobianAtPoint  # global eigen-frame
    eigenvalues: tuple  # sorted by modulus; complex pairs kept as complex
    kind: str  # source | sink | saddle | degenerate
    residual: float

    @property
    def point(self) -> np.ndarray:
        return np.array(self.lift, dtype=float)

    def as_dict(self) -> dict:
        ev = [complex(e) for e in self.eigenvalues]
        return {
            "location": [repr(self.location.x1), repr(self.location.x2)],
            "lift": [repr(self.lift.x1), repr(self.lift.x2)],
            "jacobian": [repr(v) for v in self.jacobian[:4]],
            "eigenvalues": [repr(e.real) if e.imag == 0 else [repr(e.real), repr(e.imag)] for e in ev],
            "kind": self.kind,
            "residual": repr(self.residual),
        }


def _std_jacobians(f: ComposedDiffeo, X) -> np.ndarray:
    P = f.base.frame
    return np.einsum("ij,njk,lk->nil", P, f.jacobians(X), P)


def _residual(f: ComposedDiffeo, X) -> np.ndarray:
    r = f.step(X) - X
    return r - np.round(r)


def _classify(ev) -> str:
    m = np.abs(np.asarray(ev))
    if np.any(np.abs(m - 1.0) < 1e-9):
        return "degenerate"
    if np.all(m > 1):
        return "source"
    if np.all(m < 1):
        return "sink"
    return "saddle"


def fixed_point_record(f: ComposedDiffeo, x) -> FixedPointRecord:
    """Classify a (refined) fixed point from the analytic Jacobian."""
    X = np.asarray(x, dtype=float).reshape(1, 2)
    J = f.jacobians(X)[0]
    ev = np.linalg.eigvals(J)
    ev = tuple(sorted((e.real if abs(e.imag) < 1e-300 else complex(e) for e in ev), key=abs))
    det_IJ = abs(np.linalg.det(J - np.eye(2)))
    kind = "degenerate" if det_IJ < 1e-12 else _classify(ev)
    res = float(np.hypot(*_residual(f, X)[0]))
    return FixedPointRecord(
        location=wrap(X[0]), lift=LiftedPoint(float(X[0, 0]), float(X[0, 1])),
        jacobian=JacobianAtPoint(float(J[0, 0]), float(J[0, 1]), float(J[1, 0]), float(J[1, 1])),
        eigenvalues=ev, kind=kind, residual=res,
    )


def newton_fixed_points(f: ComposedDiffeo, seeds, max_iter: int = NEWTON_MAX):
    """Damped Newton for f(x) = x mod Z^2 from every seed; returns (points, converged)."""
    X = np.array(seeds, dtype=float, copy=True)
    X -= np.round(X)
    r = _residual(f, X)
    nr = np.hypot(r[:, 0], r[:, 1])
    active = nr > 0
    I2 = np.eye(2)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        M = _std_jacobians(f, X[idx]) - I2
        det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
        ok = np.abs(det) > 1e-300
        rr = r[idx]
        dx = np.zeros_like(rr)
        dx[ok, 0] = (M[ok, 1, 1] * rr[ok, 0] - M[ok, 0, 1] * rr[ok, 1]) / det[ok]
        dx[ok, 1] = (-M[ok, 1, 0] * rr[ok, 0] + M[ok, 0, 0] * rr[ok, 1]) / det[ok]
        trial = X[idx] - dx
        rt = _residual(f, trial)
        nt = np.hypot(rt[:, 0], rt[:, 1])
        for _ in range(10):
            # damp where the residual grew
            grew = nt > nr[idx]
            if not grew.any():
                break
            dx[grew] *= 0.5
            trial[grew] = X[idx[grew]] - dx[grew]
            rt[grew] = _residual(f, trial[grew])
            nt[grew] = np.hypot(rt[grew, 0], rt[grew, 1])
        scale = np.maximum(np.abs(X[idx]).max(axis=1), 1e-300)
        small = np.hypot(dx[:, 0], dx[:, 1]) <= 4 * np.finfo(float).eps * scale
        X[idx], r[idx], nr[idx] = trial, rt, nt
        active[idx[(nt == 0) | small | ~ok]] = False
    return X, nr <= VERIFY_TOL


def feature_scale(f: ComposedDiffeo, X) -> np.ndarray:
    """Smallest half-width of the surgery boxes containing each point (inf elsewhere)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.full(len(X), np.inf)
    for ch in f.charts:
        u = f.lift_to_chart(ch, X)
        for box, off in _chart_boxes(ch):
            inside = (np.abs(u[:, 0] - off[0]) <= box[0]) & (np.abs(u[:, 1] - off[1]) <= box[1])
            out[inside] = np.minimum(out[inside], min(box))
    return out


def merge_points(f: ComposedDiffeo, X, radius: float = MERGE_RADIUS) -> np.ndarray:
    """Greedy merge; inside surgery boxes the radius shrinks to 1/100 of the box scale."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X = X - np.round(X)
    rad = np.minimum(radius, feature_scale(f, X) / 100.0)
    res = np.hypot(*_residual(f, X).T)
    left = np.ones(len(X), dtype=bool)
    reps = []
    while left.any():
        k = int(np.flatnonzero(left)[0])
        d = X - X[k]
        d -= np.round(d)
        near = left & (np.hypot(d[:, 0], d[:, 1]) <= np.maximum(rad, rad[k]))
        # the member with the smallest residual represents the group
        g = np.flatnonzero(near)
        reps.append(X[g[np.argmin(res[g])]])
        left &= ~near
    return np.array(reps).reshape(-1, 2)


def seed_points(f: ComposedDiffeo, seed_grid_n: int = 256, refine: int = 8) -> np.ndarray:
    g = (np.arange(seed_grid_n) + 0.5) / seed_grid_n
    blocks = [np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)]
    m = 16 * refine
    for ch in f.charts:
        for box, off in _chart_boxes(ch):
            blocks.append(f.chart_to_lift(ch, _box_grid(box, off, m)))
    return np.concatenate(blocks)


def find_fixed_points(f: ComposedDiffeo, seed_grid_n: int = 256, refine: int = 8) -> list[FixedPointRecord]:
    """All fixed points reachable by Newton from a torus grid plus per-box grids."""
    if seed_grid_n < 256:
        raise ValueError("seed_grid_n must be at least 256")
    X, ok = newton_fixed_points(f, seed_points(f, seed_grid_n, refine))
    X = X[ok]
    # cheap exact dedupe before the scale-aware merge
    X = np.unique(X, axis=0)
    reps = merge_points(f, X)
    recs = [fixed_point_record(f, x) for x in reps]
    recs = [r for r in recs if r.residual <= VERIFY_TOL]
    recs.sort(key=lambda r: (r.location.x1, r.location.x2))
    return recs


def refine_fixed_point(f: ComposedDiffeo, seed) -> FixedPointRecord:
    X, ok = newton_fixed_points(f, np.asarray(seed, dtype=float).reshape(1, 2))
    if not ok[0]:
        raise DynamicsError(f"Newton did not converge from {seed}")
    # keep the lift next to the seed
    x = X[0] + np.round(np.asarray(seed, dtype=float) - X[0])
    return fixed_point_record(f, x)


def export_fixed_points_json(records, path) -> None:
    with open(path, "w") as fh:
        json.dump({"schema": 1, "fixed_points": [r.as_dict() for r in records]}, fh, indent=2, sort_keys=True)
        fh.write("\n")


# basins

@dataclass(frozen=True)
class BasinResult:
    in_basin: bool
    hitting_time: int | None
    undetermined: bool = False


def _as_lift(x) -> np.ndarray:
    if isinstance(x, FixedPointRecord):
        return x.point
    return np.asarray(x, dtype=float).reshape(2)


def default_capture_radius(f: ComposedDiffeo, q, n_circle: int = 64) -> float:
    """Largest radius 2^-k on which ||Df - Df(q)|| < (1 - 0.85)/2 at sampled circles."""
    qL = _as_lift(q)
    J0 = f.jacobians(qL)[0]
    th = 2 * np.pi * np.arange(n_circle) / n_circle
    ring = np.stack([np.cos(th), np.sin(th)], 1)
    bound = 0.5 * (1.0 - SINK_CONTRACTION)
    r = 1e-2
    while r > 1e-18:
        X = np.concatenate([qL + t * r * ring for t in (1.0, 0.5, 0.25)])
        dJ = f.jacobians(X) - J0
        if np.linalg.norm(dJ, ord=2, axis=(1, 2)).max() < bound:
            return r
        r *= 0.5
    raise DynamicsError("no contracting neighbourhood found around q")


def basin_hitting_times(f: ComposedDiffeo, X, q, capture_radius: float | None = None, max_iter: int = 1000):
    """First iterate entering the capture disc around q, or -1."""
    qL = _as_lift(q)
    r = default_capture_radius(f, qL) if capture_radius is None else capture_radius
    X = np.atleast_2d(np.asarray(X, dtype=float)).copy()
    X -= np.round(X - qL)
    T = np.full(len(X), -1, dtype=np.int64)
    active = np.ones(len(X), dtype=bool)
    for n in range(max_iter + 1):
        d = X[active] - qL
        hit = np.hypot(d[:, 0], d[:, 1]) < r
        idx = np.flatnonzero(active)
        T[idx[hit]] = n
        active[idx[hit]] = False
        if n == max_iter or not active.any():
            break
        Y = f.step(X[active])
        X[active] = Y - np.round(Y - qL)
    return T


def in_basin_of_sink(f: ComposedDiffeo, x, q, capture_radius: float | None = None,
                     max_iter: int = 1000) -> BasinResult:
    if isinstance(q, FixedPointRecord) and q.kind != "sink":
        raise ValueError("q must be a sink")
    t = int(basin_hitting_times(f, _as_lift(x), q, capture_radius, max_iter)[0])
    if t < 0:
        return BasinResult(False, None, True)
    return BasinResult(True, t, False)


# curves

@dataclass
class TorusCurve:
    vertices: np.ndarray  # (N, 2) lifted
    kind: str  # E_curve | F_curve | unstable_manifold | stable_manifold
    step: float
    center_index: int = 0
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        d = np.diff(self.vertices, axis=0)
        self.arclength = np.concatenate([[0.0], np.cumsum(np.hypot(d[:, 0], d[:, 1]))])

    @property
    def length(self) -> float:
        return float(self.arclength[-1])

    def points(self) -> list[LiftedPoint]:
        return [LiftedPoint(float(a), float(b)) for a, b in self.vertices]

    def max_gap(self) -> float:
        return float(np.diff(self.arclength).max()) if len(self.vertices) > 1 else 0.0

    def tangents(self) -> np.ndarray:
        """Unit central-difference tangents at interior vertices."""
        d = self.vertices[2:] - self.vertices[:-2]
        return d / np.hypot(d[:, 0], d[:, 1])[:, None]

    def to_csv(self, path) -> None:
        W = self.vertices - np.floor(self.vertices)
        with open(path, "w") as fh:
            fh.write("arclength,x1,x2,lifted_x1,lifted_x2\n")
            for s, w, v in zip(self.arclength, W, self.vertices):
                fh.write(f"{s:.17g},{w[0]:.17g},{w[1]:.17g},{v[0]:.17g},{v[1]:.17g}\n")


def point_segment_distances(V: np.ndarray, target) -> tuple[np.ndarray, np.ndarray]:
    """Distances from target (nearest lift per segment) to each segment of V and the local parameter."""
    A, B = V[:-1], V[1:]
    t = np.asarray(target, dtype=float)
    P = t - np.round(t - A)
    AB = B - A
    L2 = (AB ** 2).sum(axis=1)
    s = np.where(L2 > 0, ((P - A) * AB).sum(axis=1) / np.where(L2 > 0, L2, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    # subtract in the order that keeps precision when the target sits on the segment
    D = (P - A) - s[:, None] * AB
    return np.hypot(D[:, 0], D[:, 1]), s


def closest_approach(c: TorusCurve, target) -> tuple[float, float]:
    """(distance, arclength parameter) of the point of c closest to target."""
    if len(c.vertices) == 1:
        d = np.asarray(target, dtype=float) - c.vertices[0]
        d -= np.round(d)
        return float(np.hypot(*d)), 0.0
    dist, s = point_segment_distances(c.vertices, target)
    k = int(np.argmin(dist))
    seg = c.arclength[k + 1] - c.arclength[k]
    return float(dist[k]), float(c.arclength[k] + s[k] * seg)


def curve_passes_through(c: TorusCurve, target, tol: float) -> tuple[bool, float, float]:
    d, s = closest_approach(c, _as_lift(target))
    return d <= tol, d, s


def _direction_field(f: ComposedDiffeo, which: str, n: int, tol: float):
    P = f.base.frame

    def field_(X):
        V, r, _ = bundle_vectors(f, X, which, n, tol)
        return V @ P.T, r
    return field_


def _box_list(f: ComposedDiffeo):
    out = []
    for ch in f.charts:
        for box, off in _chart_boxes(ch):
            out.append((ch, np.asarray(box, dtype=float), np.asarray(off, dtype=float)))
    return out


def step_caps(f: ComposedDiffeo, X, D, step: float, resolution: int = 64) -> np.ndarray:
    """Per-point step size: resolve each surgery box along the direction of motion.

    Inside a box the step is at most 1/resolution of the time needed to cross
    its features along D; outside, the step at most halves the distance to the box.
    """
    h = np.full(len(X), float(step))
    for ch, box, off in _box_list(f):
        u = f.lift_to_chart(ch, X) - off
        d = D @ ch.frame
        with np.errstate(divide="ignore"):
            cross = np.min(box / np.maximum(np.abs(d), 1e-300), axis=1) / resolution
        gap = np.max(np.maximum(np.abs(u) - box, 0.0), axis=1)
        cap = np.where(gap > 0, np.maximum(0.5 * gap, cross), cross)
        h = np.minimum(h, cap)
    return h


def trace_integral_curves(f: ComposedDiffeo, X0, bundle: str = "E", half_length: float = 0.0075,
                          step: float = 1e-5, n: int = DEFAULT_N, tol: float = DEFAULT_TOL,
                          max_steps: int = 200_000) -> list[TorusCurve]:
    """RK4 integral curves of the unit E or F field through every row of X0, both orientations."""
    if bundle not in ("E", "F"):
        raise ValueError("bundle must be 'E' or 'F'")
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    M = len(X0)
    field_ = _direction_field(f, bundle, n, tol)
    halves = []
    flags = [dict() for _ in range(M)]
    for sgn in (1.0, -1.0):
        X = X0.copy()
        s = np.zeros(M)
        paths = [[x.copy()] for x in X]
        active = np.ones(M, dtype=bool)
        for _ in range(max_steps):
            if not active.any():
                break
            idx = np.flatnonzero(active)
            x = X[idx]
            k1, r1 = field_(x)
            k1 *= sgn
            h = np.minimum(step_caps(f, x, k1, step), half_length - s[idx])
            k2, r2 = field_(x + 0.5 * h[:, None] * k1)
            k2 *= sgn
            k3, r3 = field_(x + 0.5 * h[:, None] * k2)
            k3 *= sgn
            k4, r4 = field_(x + h[:, None] * k3)
            k4 *= sgn
            bad = np.maximum.reduce([r1, r2, r3, r4]) > tol
            xn = x + (h[:, None] / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            for j, i in enumerate(idx):
                if bad[j]:
                    flags[i]["aborted"] = True
                    flags[i]["abort_point"] = [float(x[j, 0]), float(x[j, 1])]
                    active[i] = False
                    continue
                paths[i].append(xn[j])
            good = idx[~bad]
            X[good] = xn[~bad]
            s[good] += h[~bad]
            active[good[s[good] >= half_length * (1 - 1e-12)]] = False
        else:
            for i in np.flatnonzero(active):
                flags[i]["aborted"] = True
        halves.append(paths)
    kind = "E_curve" if bundle == "E" else "F_curve"
    curves = []
    for i in range(M):
        back = np.array(halves[1][i][::-1])
        fwd = np.array(halves[0][i][1:]).reshape(-1, 2)
        V = np.concatenate([back, fwd])
        curves.append(TorusCurve(V, kind, step, center_index=len(back) - 1, flags=flags[i]))
    return curves


def trace_integral_curve(f: ComposedDiffeo, x, bundle: str = "E", half_length: float = 0.0075,
                         step: float = 1e-5, n: int = DEFAULT_N, tol: float = DEFAULT_TOL) -> TorusCurve:
    return trace_integral_curves(f, np.asarray(x, dtype=float).reshape(1, 2), bundle, half_length, step, n, tol)[0]


def rk4_polyline(field_, x0, length: float, step: float) -> np.ndarray:
    """Plain RK4 on a unit field from x0 to the given arclength (generic integrator core)."""
    x = np.asarray(x0, dtype=float).copy()
    out = [x.copy()]
    s = 0.0
    while s < length * (1 - 1e-12):
        h = min(step, length - s)
        k1 = field_(x)
        k2 = field_(x + 0.5 * h * k1)
        k3 = field_(x + 0.5 * h * k2)
        k4 = field_(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
        out.append(x.copy())
    return np.array(out)


def tangent_deviation(f: ComposedDiffeo, c: TorusCurve, bundle: str, n_vertices: int = 50) -> float:
    """Max angle between the polyline tangent and the bundle at evenly spaced interior vertices."""
    T = c.tangents()
    if len(T) == 0:
        return 0.0
    k = np.unique(np.linspace(0, len(T) - 1, min(n_vertices, len(T))).round().astype(int))
    V, _, _ = bundle_vectors(f, c.vertices[k + 1], bundle)
    W = V @ f.base.frame.T
    cr = np.abs(T[k, 0] * W[:, 1] - T[k, 1] * W[:, 0])
    dt = np.abs((T[k] * W).sum(axis=1))
    return float(np.arctan2(cr, dt).max())


# strong manifolds

@dataclass
class ManifoldSegment:
    base: FixedPointRecord
    branches: tuple  # two TorusCurve, each starting at the base point
    half_length: float
    kind: str = "unstable_manifold"
    verification_depth: int = 0
    verification: dict = field(default_factory=dict)

    def polyline(self) -> TorusCurve:
        a, b = self.branches
        V = np.concatenate([a.vertices[::-1], b.vertices[1:]])
        return TorusCurve(V, self.kind, a.step, center_index=len(a.vertices) - 1)

    def branch_lengths(self) -> tuple[float, float]:
        return (self.branches[0].length, self.branches[1].length)


def _refine_images(f, Z, Y, step, max_rounds=60):
    """Insert mapped midpoints of Z until consecutive images Y are within step."""
    for _ in range(max_rounds):
        g = np.hypot(*np.diff(Y, axis=0).T)
        big = np.flatnonzero(g > step)
        if len(big) == 0:
            return Z, Y
        Zm = 0.5 * (Z[big] + Z[big + 1])
        Ym = f.step(Zm)
        Ym -= np.round(Ym - 0.5 * (Y[big] + Y[big + 1]))
        Z = np.insert(Z, big + 1, Zm, axis=0)
        Y = np.insert(Y, big + 1, Ym, axis=0)
    raise DynamicsError("manifold refinement did not resolve the curve")


def _thin(Z, Y, step):
    """Drop vertices while gaps stay below step (the first vertex is kept)."""
    keep = [0]
    last = Y[0]
    for k in range(1, len(Y) - 1):
        if np.hypot(*(Y[k + 1] - last)) > step:
            keep.append(k)
            last = Y[k]
    keep.append(len(Y) - 1)
    return Z[keep], Y[keep]


def _resample(V, spacing, length):
    d = np.hypot(*np.diff(V, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(d)])
    n = int(math.floor(length / spacing + 1e-9))
    t = np.append(np.arange(n + 1) * spacing, length) if n * spacing < length * (1 - 1e-12) else np.arange(n + 1) * spacing
    x = np.interp(t, s, V[:, 0])
    y = np.interp(t, s, V[:, 1])
    return np.stack([x, y], 1)


def _default_step(f: ComposedDiffeo) -> float:
    return f.eps / 500 if f.eps > 0 else 1e-5


def grow_unstable_manifold(f: ComposedDiffeo, p: FixedPointRecord, half_length: float = 0.1,
                           step: float | None = None, max_iter: int = 200,
                           kind: str = "unstable_manifold") -> ManifoldSegment:
    """W^uu_{half_length}(p) by forward growth of a short F(p)-tangent seed."""
    if p.kind not in ("source", "saddle"):
        raise ValueError("p must be a source or a saddle")
    step = _default_step(f) if step is None else step
    P = f.base.frame
    x0 = p.point
    V, _, _ = bundle_vectors(f, x0, "F")
    v = P @ V[0]
    fine = step / 4
    branches = []
    for sgn in (1.0, -1.0):
        t = np.linspace(0.0, 10 * step, 41)
        Z = x0 + sgn * t[:, None] * v
        for _ in range(max_iter):
            Y = f.step(Z)
            Y -= np.round(Y[0] - x0)
            Y[0] = x0
            Z, Y = _refine_images(f, Z, Y, fine)
            _, Z = _thin(Z, Y, fine)
            L = np.hypot(*np.diff(Z, axis=0).T).sum()
            if L >= half_length + 2 * step:
                break
        else:
            raise DynamicsError("manifold growth stalled before reaching half_length")
        B = _resample(Z, step, half_length)
        branches.append(TorusCurve(B, kind, step))
    seg = ManifoldSegment(p, (branches[0], branches[1]), half_length, kind)
    _verify_manifold(f, seg)
    return seg


def _verify_manifold(f: ComposedDiffeo, seg: ManifoldSegment, n_samples: int = 20, n_max: int = N_MAX_VERIFY):
    """Backward-orbit check of the W^uu definition on sample points of both branches."""
    x0 = seg.base.point
    # ||Df^{-n}|_{E(x)}|| at the fixed point: the E-eigenvalue of Df(x)
    Vx, _, _ = bundle_vectors(f, x0, "E")
    J = f.jacobians(x0)[0]
    aE = float(np.hypot(*(J @ Vx[0])))
    ys = []
    for b in seg.branches:
        k = np.linspace(1, len(b.vertices) - 1, n_samples // 2).round().astype(int)
        ys.append(b.vertices[k])
    Y = np.concatenate(ys)
    dist_ok = np.ones(len(Y), dtype=bool)
    first_N = np.full(len(Y), -1)
    transient = np.zeros(len(Y), dtype=bool)
    X = Y.copy()
    for n in range(1, n_max + 1):
        Z = f.step_inverse(X)
        X = Z - np.round(Z - x0)
        d = np.hypot(*(X - x0).T)
        dist_ok &= d < 0.1
        ratio = d * aE ** n  # d / ||Df^{-n}|_E|| with ||Df^{-n}|_E|| = aE^{-n}
        hit = (ratio < 0.5) & (first_N < 0)
        first_N[hit] = n
        transient |= (first_N > 0) & (first_N < n) & (ratio >= 0.5)
    seg.verification_depth = int(first_N.max()) if (first_N > 0).all() else -1
    seg.verification = {
        "samples": int(len(Y)),
        "n_max": n_max,
        "distance_condition": bool(dist_ok.all()),
        "ratio_condition": bool((first_N > 0).all()),
        "transient_ratio_flags": int(transient.sum()),
        "passed": bool(dist_ok.all() and (first_N > 0).all()),
    }


def grow_stable_manifold(f: ComposedDiffeo, p: FixedPointRecord, half_length: float = 0.1,
                         step: float | None = None) -> ManifoldSegment:
    """W^ss_{half_length}(p): the strong unstable manifold of f^{-1}."""
    if p.kind not in ("sink", "saddle"):
        raise ValueError("p must be a sink or a saddle")
    g = f.inverse()
    pg = fixed_point_record(g, p.point)
    seg = grow_unstable_manifold(g, pg, half_length, _default_step(f) if step is None else step,
                                 kind="stable_manifold")
    seg.base = p
    return seg


def polyline_distance(V: np.ndarray, X) -> np.ndarray:
    """Distance from each row of X to the polyline V (same lift neighbourhood)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.array([point_segment_distances(V, x)[0].min() for x in X])


def signed_position(V: np.ndarray, center_index: int, X) -> np.ndarray:
    """Signed arclength from V[center_index] of the closest point of V to each X."""
    d = np.hypot(*np.diff(V, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(d)])
    s -= s[center_index]
    out = []
    for x in np.atleast_2d(X):
        dist, t = point_segment_distances(V, x)
        k = int(np.argmin(dist))
        out.append(s[k] + t[k] * (s[k + 1] - s[k]))
    return np.array(out)
