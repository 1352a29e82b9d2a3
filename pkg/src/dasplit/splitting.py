"""Domination certificates and numerical E/F direction fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .surgery import ComposedDiffeo, _box_grid, _chart_boxes, stratified_points
from .torus import Direction, TorusPoint, wrap

DEFAULT_TOL = 1e-10
DEFAULT_N = 200


@dataclass
class DominationCertificate:
    K: float | None = None
    eta: float | None = None
    eps_offdiag: float | None = None
    delta: float | None = None
    grid_spacing: float = 0.0
    n_points: int = 0
    verdicts: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(self.verdicts.values())

    def as_dict(self) -> dict:
        return {
            "K": self.K,
            "eta": self.eta,
            "eps_offdiag": self.eps_offdiag,
            "delta": self.delta,
            "grid_spacing": self.grid_spacing,
            "n_points": self.n_points,
            "passed": self.passed,
            "verdicts": dict(self.verdicts),
            "margins": dict(self.margins),
            "witnesses": dict(self.witnesses),
        }


def certificate_points(f: ComposedDiffeo, grid_n: int, refine: int = 8):
    """Torus grid plus refined grids over every surgery box, as lifted points."""
    g = (np.arange(grid_n) + 0.5) / grid_n
    blocks = [np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)]
    m = refine * grid_n
    for ch in f.charts:
        for box, off in _chart_boxes(ch):
            blocks.append(f.chart_to_lift(ch, _box_grid(box, off, m)))
    return blocks


def _witness(X, J, k, value):
    x = wrap(X[k])
    return {
        "point": [x.x1, x.x2],
        "entries": [float(J[k, 0, 0]), float(J[k, 0, 1]), float(J[k, 1, 0]), float(J[k, 1, 1])],
        "value": float(value),
    }


def _scan(f, blocks, fn):
    """Apply fn(X, J) -> dict name -> margin array to every block; keep the worst."""
    worst = {}
    n = 0
    for X in blocks:
        for s in range(0, len(X), 1 << 18):
            Xs = X[s:s + (1 << 18)]
            J = f.jacobians(Xs)
            n += len(Xs)
            for name, marg in fn(Xs, J).items():
                k = int(np.argmin(marg))
                if name not in worst or marg[k] < worst[name][0]:
                    worst[name] = (float(marg[k]), _witness(Xs, J, k, marg[k]))
    return worst, n


def check_lemma2_conditions(f: ComposedDiffeo, K: float, eta: float, eps: float, grid_n: int = 128,
                            refine: int = 8) -> DominationCertificate:
    """Grid check of min(|a|,|d|) > K, |d| > eta |a|, max(|b|,|c|) < eps."""
    if grid_n < 128:
        raise ValueError("grid_n must be at least 128")

    def margins(X, J):
        a, b, c, d = (np.abs(J[:, i, j]) for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)))
        return {
            "min_diag": np.minimum(a, d) - K,
            "domination": d - eta * a,
            "offdiag": eps - np.maximum(b, c),
        }

    worst, n = _scan(f, certificate_points(f, grid_n, refine), margins)
    cert = DominationCertificate(K=K, eta=eta, eps_offdiag=eps, grid_spacing=1.0 / grid_n, n_points=n)
    for name, (m, w) in worst.items():
        cert.verdicts[name] = m > 0
        cert.margins[name] = m
        cert.witnesses[name] = w
    return cert


def cone_margins(J, delta):
    """Relative margins 1 - (image cone slope)/tan(delta) for both cone families."""
    T = math.tan(delta)
    a, b, c, d = J[:, 0, 0], J[:, 0, 1], J[:, 1, 0], J[:, 1, 1]
    # unstable cone: vectors (t, 1), |t| <= T, mapped forward
    den_ok = np.abs(c) * T < np.abs(d)
    su = np.maximum(np.abs(a * T + b) / np.abs(c * T + d), np.abs(-a * T + b) / np.abs(-c * T + d))
    mu_ = np.where(den_ok, 1.0 - su / T, -np.inf)
    # stable cone: vectors (1, t) mapped by J^{-1} ~ [[d, -b], [-c, a]]
    den_ok = np.abs(b) * T < np.abs(d)
    ss = np.maximum(np.abs(a * T - c) / np.abs(d - b * T), np.abs(-a * T - c) / np.abs(d + b * T))
    ms = np.where(den_ok, 1.0 - ss / T, -np.inf)
    return mu_, ms


def check_cone_invariance(f: ComposedDiffeo, delta: float, grid_n: int = 128, refine: int = 8) -> DominationCertificate:
    """Strict invariance of the delta-cones around e_u (forward) and e_s (backward)."""
    if not 0 < delta < math.pi / 4:
        raise ValueError("delta must lie in (0, pi/4)")

    def margins(X, J):
        mu_, ms = cone_margins(J, delta)
        return {"unstable_cone": mu_, "stable_cone": ms}

    worst, n = _scan(f, certificate_points(f, grid_n, refine), margins)
    cert = DominationCertificate(delta=delta, grid_spacing=1.0 / grid_n, n_points=n)
    for name, (m, w) in worst.items():
        cert.verdicts[name] = m > 0
        cert.margins[name] = m
        cert.witnesses[name] = w
    return cert


@dataclass(frozen=True)
class BundleSample:
    point: TorusPoint
    E_dir: Direction | None
    F_dir: Direction | None
    iterations_used: int
    convergence_residual: float
    converged: bool = True


def _to_direction(f: ComposedDiffeo, v) -> Direction:
    return Direction.from_vector(f.base.frame @ v)


def bundle_vectors(f: ComposedDiffeo, X, which: str, n: int = DEFAULT_N, tol: float = DEFAULT_TOL):
    """Unit E or F vectors in the eigen-frame at lifted points, with residuals and orbit lengths."""
    w = 0 if which == "E" else 1
    X = np.atleast_2d(np.asarray(X, dtype=float))
    V, r, used = kernels.backend.bundle(f.table, X, w, n, tol)
    bad = ~np.isfinite(V).all(axis=1)
    if bad.any():
        # seed landed on the complementary bundle; one deterministic re-seed
        rng = np.random.default_rng(12345)
        for k in np.flatnonzero(bad):
            V[k] = rng.normal(size=2)
            V[k] /= np.hypot(*V[k])
    return V, r, used


def compute_F_direction(f: ComposedDiffeo, x, n: int = DEFAULT_N, tol: float = DEFAULT_TOL) -> BundleSample:
    if n > 10_000:
        raise ValueError("n must be at most 10^4")
    V, r, used = bundle_vectors(f, x, "F", n, tol)
    return BundleSample(wrap(x), None, _to_direction(f, V[0]), int(used[0]), float(r[0]), bool(r[0] < tol))


def compute_E_direction(f: ComposedDiffeo, x, n: int = DEFAULT_N, tol: float = DEFAULT_TOL) -> BundleSample:
    if n > 10_000:
        raise ValueError("n must be at most 10^4")
    V, r, used = bundle_vectors(f, x, "E", n, tol)
    return BundleSample(wrap(x), _to_direction(f, V[0]), None, int(used[0]), float(r[0]), bool(r[0] < tol))


def compute_bundles(f: ComposedDiffeo, x, n: int = DEFAULT_N, tol: float = DEFAULT_TOL) -> BundleSample:
    E = compute_E_direction(f, x, n, tol)
    F = compute_F_direction(f, x, n, tol)
    return BundleSample(E.point, E.E_dir, F.F_dir, max(E.iterations_used, F.iterations_used),
                        max(E.convergence_residual, F.convergence_residual), E.converged and F.converged)


def eigen_angles(V, which: str) -> np.ndarray:
    """Angle between eigen-frame vectors and e_s (which='E') or e_u (which='F')."""
    if which == "E":
        return np.arctan2(np.abs(V[:, 1]), np.abs(V[:, 0]))
    return np.arctan2(np.abs(V[:, 0]), np.abs(V[:, 1]))


def angle_report(f: ComposedDiffeo, samples: int = 1000, delta: float | None = None, seed: int = 0) -> dict:
    """Max angle of E to e_s and F to e_u over stratified samples."""
    delta = f.delta if delta is None else delta
    rng = np.random.default_rng(seed)
    n_ch = max(1, len(f.charts))
    per = samples // (1 + 4 * n_ch)
    X = stratified_points(f, samples - 4 * n_ch * per, per, per, rng)
    VE, rE, _ = bundle_vectors(f, X, "E")
    VF, rF, _ = bundle_vectors(f, X, "F")
    aE, aF = eigen_angles(VE, "E"), eigen_angles(VF, "F")
    return {
        "samples": int(len(X)),
        "delta": delta,
        "max_angle_E_es": float(aE.max()),
        "max_angle_F_eu": float(aF.max()),
        "min_angle_E_F": float(np.min(np.pi / 2 - aE - aF)),
        "max_residual": float(max(rE.max(), rF.max())),
        "passed": bool(aE.max() < delta and aF.max() < delta),
    }


def export_bundles_csv(f: ComposedDiffeo, X, path) -> None:
    """CSV with x1, x2, theta_E, theta_F, residual (angles in standard coordinates)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    VE, rE, _ = bundle_vectors(f, X, "E")
    VF, rF, _ = bundle_vectors(f, X, "F")
    P = f.base.frame
    with open(path, "w") as fh:
        fh.write("x1,x2,theta_E,theta_F,residual\n")
        for x, ve, vf, r in zip(X, VE, VF, np.maximum(rE, rF)):
            p = wrap(x)
            tE = Direction.from_vector(P @ ve).theta
            tF = Direction.from_vector(P @ vf).theta
            fh.write(f"{p.x1:.17g},{p.x2:.17g},{tE:.17g},{tF:.17g},{r:.17g}\n")
