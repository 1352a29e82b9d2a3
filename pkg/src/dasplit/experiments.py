"""Numerical reproductions: the basin-curve lemma, its intermediate claims,
the saddle remark, the two-site theorem and a robustness probe.

Reports are plain dictionaries built in a fixed order so that identical
inputs give byte-identical JSON.  Wall-clock timing is kept on the report
object but never serialised.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import mapspec
from .dynamics import (
    DynamicsError,
    FixedPointRecord,
    ManifoldSegment,
    TorusCurve,
    basin_hitting_times,
    closest_approach,
    default_capture_radius,
    find_fixed_points,
    grow_unstable_manifold,
    point_segment_distances,
    refine_fixed_point,
    trace_integral_curves,
)
from .splitting import angle_report, check_cone_invariance, check_lemma2_conditions
from .surgery import ComposedDiffeo, SurgeryError, perturbed, sup_norm_Df
from .torus import torus_distance

LIMITATION = ("the tracer follows one numerical integral curve per start point; "
              "other integral curves of the same field are not explored")
BASIN_MAX_ITER = 400
REPORT_SCHEMA = 1


def _r(x) -> float:
    return float(x)


def _pt(x) -> list:
    return [float(x[0]), float(x[1])]


@dataclass
class ExperimentReport:
    name: str
    map_label: str
    mode: str
    map_hash: str
    parameters: dict
    samples: list = field(default_factory=list)
    verdict: str = "FAIL"  # PASS | FAIL | INAPPLICABLE | OUTSIDE_CERTIFIED_NEIGHBORHOOD
    details: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    timing: float = 0.0
    curves: list = field(default_factory=list, repr=False)
    parts: dict = field(default_factory=dict)
    ledger: "IntersectionLedger | None" = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def as_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "name": self.name,
            "map": {"label": self.map_label, "mode": self.mode, "hash": self.map_hash},
            "parameters": self.parameters,
            "verdict": self.verdict,
            "passed": self.passed,
            "details": self.details,
            "samples": self.samples,
            "parts": {k: v.as_dict() for k, v in self.parts.items()},
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


# sites

@dataclass
class Site:
    chart_index: int
    p: FixedPointRecord
    q: FixedPointRecord
    qprime: FixedPointRecord


def find_site(f: ComposedDiffeo) -> Site | None:
    """First forward double-DA chart: source p, sink q and flip saddle q'."""
    for i, ch in enumerate(f.charts):
        if ch.kind != "first_da" or ch.orientation != "forward" or ch.inner is None:
            continue
        s = ch.inner_center_offset[0]
        try:
            p = refine_fixed_point(f, f.chart_to_lift(ch, np.zeros((1, 2)))[0])
            q = refine_fixed_point(f, f.chart_to_lift(ch, np.array([[s, 0.0]]))[0])
            qp = refine_fixed_point(f, f.chart_to_lift(ch, np.array([[-s, 0.0]]))[0])
        except DynamicsError:
            continue
        if p.kind == "source" and q.kind == "sink" and qp.kind == "saddle":
            return Site(i, p, q, qp)
    return None


def default_step(f: ComposedDiffeo) -> float:
    return f.eps / 500


def basin_samples(f: ComposedDiffeo, site: Site, n_samples: int, rng, n_ring: int = 10):
    """Candidate points in B(q) and their hitting times.

    Ring samples at radii eps/4 and eps/2 around q are kept when they are in
    the basin.  The basin itself is a lens around the local weak axis of q
    whose half-width is found by bisection; lens samples sit at random
    fractions of that half-width.
    """
    ch = f.charts[site.chart_index]
    qL = site.q.point
    cap = default_capture_radius(f, site.q)
    th = 2 * np.pi * np.arange(n_ring) / n_ring
    ring = np.concatenate([qL + r * np.stack([np.cos(th), np.sin(th)], 1) for r in (f.eps / 4, f.eps / 2)])
    k1 = ch.inner.support[0]
    s = ch.inner_center_offset[0]
    v1 = rng.uniform(-0.3, 0.3, n_samples) * k1
    frac = rng.uniform(0.1, 0.6, n_samples)
    sign = np.where(np.arange(n_samples) % 2 == 0, 1.0, -1.0)
    lo = np.zeros(n_samples)
    hi = np.full(n_samples, ch.inner.alpha.half_support)
    for _ in range(45):
        m = 0.5 * (lo + hi)
        U = np.stack([s + v1, sign * m], 1)
        t = basin_hitting_times(f, f.chart_to_lift(ch, U), qL, cap, BASIN_MAX_ITER)
        lo = np.where(t >= 0, m, lo)
        hi = np.where(t >= 0, hi, m)
    lens = f.chart_to_lift(ch, np.stack([s + v1, sign * frac * lo], 1))
    X = np.concatenate([ring, lens])
    src = ["ring"] * len(ring) + ["lens"] * len(lens)
    T = basin_hitting_times(f, X, qL, cap, BASIN_MAX_ITER)
    keep = T >= 0
    return X[keep], T[keep], [s_ for s_, k in zip(src, keep) if k], int(len(ring)), int(keep[: len(ring)].sum())


def lemma3_experiment(f: ComposedDiffeo, n_samples: int = 20, seed: int = 0, step: float | None = None,
                      tol: float | None = None, target: str = "p", with_ledger: bool = True,
                      name: str = "lemma3") -> ExperimentReport:
    """E-curves of length 3 eps centred at basin points of q must pass through p (or q')."""
    t0 = time.perf_counter()
    step = default_step(f) if step is None else step
    tol = 5 * step if tol is None else tol
    params = {"eps": _r(f.eps), "delta": _r(f.delta), "step": _r(step), "tol": _r(tol),
              "half_length": _r(1.5 * f.eps), "n_samples": int(n_samples), "seed": int(seed), "target": target}
    rep = ExperimentReport(name, f.label, f.mode, mapspec.spec_hash(f), params, notes=[LIMITATION])
    site = find_site(f) if f.charts else None
    if site is None:
        rep.verdict = "INAPPLICABLE"
        rep.details = {"reason": "no sink basin"}
        rep.timing = time.perf_counter() - t0
        return rep
    goal = site.p if target == "p" else site.qprime
    rng = np.random.default_rng(seed)
    X, T, src, n_ring, n_ring_in = basin_samples(f, site, n_samples, rng)
    rep.details["site"] = {
        "p": _pt(site.p.point), "q": _pt(site.q.point), "q_prime": _pt(site.qprime.point),
        "target": _pt(goal.point), "target_kind": goal.kind,
        "target_eigenvalues": [float(abs(e)) for e in goal.eigenvalues],
    }
    rep.details["ring_samples"] = {"candidates": n_ring, "in_basin": n_ring_in}
    if len(X) == 0:
        rep.verdict = "INAPPLICABLE"
        rep.details["reason"] = "no basin samples found"
        rep.timing = time.perf_counter() - t0
        return rep
    curves = trace_integral_curves(f, X, "E", 1.5 * f.eps, step)
    dists = []
    for k, (x, c) in enumerate(zip(X, curves)):
        d, s_at = closest_approach(c, goal.point)
        aborted = bool(c.flags.get("aborted", False))
        ok = (d <= tol) and not aborted
        dists.append(d)
        rep.samples.append({
            "index": k, "source": src[k], "point": _pt(x), "hitting_time": int(T[k]),
            "curve_length": _r(c.length), "n_vertices": int(len(c.vertices)),
            "closest_approach": _r(d), "arclength_at_closest": _r(s_at - c.arclength[c.center_index]),
            "aborted": aborted, "passed": bool(ok),
        })
    rep.curves = curves
    dists = np.array(dists)
    rep.details["closest_approach"] = {
        "min": _r(dists.min()), "median": _r(np.median(dists)), "max": _r(dists.max()),
        "all": [_r(d) for d in dists],
    }
    rep.details["n_basin_samples"] = int(len(X))
    all_ok = all(s["passed"] for s in rep.samples)
    if with_ledger and target == "p":
        wuu = grow_unstable_manifold(f, site.p, 0.1, step)
        ledger = unique_intersection_check(f, curves, wuu)
        rep.details["intersections"] = ledger.as_dict()
        rep.details["wuu"] = {"branch_lengths": [_r(v) for v in wuu.branch_lengths()],
                              "verification": wuu.verification}
        rep.ledger = ledger
    rep.verdict = "PASS" if all_ok else "FAIL"
    rep.timing = time.perf_counter() - t0
    return rep


# intersections with W^uu

@dataclass
class IntersectionLedger:
    wuu: ManifoldSegment
    entries: list  # (curve id, point, signed position on W^uu)
    crossings: list  # per-curve crossing counts
    ambiguous: list  # per-curve flags
    a: float = 0.0
    b: float = 0.0
    point_a: np.ndarray | None = None
    point_b: np.ndarray | None = None
    d_a: float = 0.0
    d_b: float = 0.0
    eps: float = 0.0

    @property
    def single_crossings(self) -> bool:
        return bool(self.crossings) and all(c == 1 for c in self.crossings) and not any(self.ambiguous)

    @property
    def within_2eps(self) -> bool:
        return max(self.d_a, self.d_b) < 2 * self.eps

    def as_dict(self) -> dict:
        return {
            "entries": [{"curve": int(i), "point": _pt(x), "position": _r(s)} for i, x, s in self.entries],
            "crossings": [int(c) for c in self.crossings],
            "ambiguous": [bool(a) for a in self.ambiguous],
            "a": _r(self.a), "b": _r(self.b),
            "d_a_p": _r(self.d_a), "d_b_p": _r(self.d_b),
            "max_distance": _r(max(self.d_a, self.d_b)), "bound_2eps": _r(2 * self.eps),
            "single_crossings": self.single_crossings, "within_2eps": self.within_2eps,
        }


class _Polyline:
    """Nearest-segment queries on a long polyline with coarse-to-fine search."""

    def __init__(self, V: np.ndarray, center_index: int, stride: int = 64):
        self.V = V
        d = np.hypot(*np.diff(V, axis=0).T)
        s = np.concatenate([[0.0], np.cumsum(d)])
        self.s = s - s[center_index]
        self.stride = stride
        self.coarse = np.arange(0, len(V), stride)

    def nearest(self, X: np.ndarray):
        """(segment index, local parameter, distance, signed side) per point."""
        V, st = self.V, self.stride
        C = V[self.coarse]
        D = np.hypot(X[:, None, 0] - C[None, :, 0], X[:, None, 1] - C[None, :, 1])
        k0 = self.coarse[np.argmin(D, axis=1)]
        n = len(V) - 1
        seg = np.empty(len(X), dtype=np.int64)
        par = np.empty(len(X))
        dist = np.empty(len(X))
        side = np.empty(len(X))
        for i, (x, k) in enumerate(zip(X, k0)):
            lo, hi = max(0, k - 2 * st), min(n, k + 2 * st)
            A, B = V[lo:hi], V[lo + 1:hi + 1]
            AB = B - A
            L2 = (AB ** 2).sum(axis=1)
            t = np.clip(((x - A) * AB).sum(axis=1) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
            R = (x - A) - t[:, None] * AB
            dd = np.hypot(R[:, 0], R[:, 1])
            j = int(np.argmin(dd))
            seg[i], par[i], dist[i] = lo + j, t[j], dd[j]
            side[i] = AB[j, 0] * (x[1] - A[j, 1]) - AB[j, 1] * (x[0] - A[j, 0])
        return seg, par, dist, side

    def position(self, seg, par):
        return self.s[seg] + par * (self.s[seg + 1] - self.s[seg])

    def interior(self, seg, par):
        return ~(((seg == 0) & (par <= 0)) | ((seg == len(self.V) - 2) & (par >= 1)))


def _segment_hit(a, b, c, d):
    """Intersection parameter along ab of the lines ab and cd (relative coordinates)."""
    r, s = b - a, d - c
    den = r[0] * s[1] - r[1] * s[0]
    if den == 0:
        return 0.5
    return float(np.clip(((c[0] - a[0]) * s[1] - (c[1] - a[1]) * s[0]) / den, 0.0, 1.0))


def count_crossings(poly: _Polyline, C: np.ndarray, step: float):
    """Sign changes of the side function along C; returns (count, ambiguous, hits)."""
    seg, par, dist, side = poly.nearest(C)
    inside = poly.interior(seg, par)
    hits = []
    last = None
    for k in range(len(C)):
        if not inside[k] or side[k] == 0:
            if not inside[k]:
                last = None
            continue
        sg = side[k] > 0
        if last is not None and sg != last[1]:
            j = last[0]
            a, b = C[j], C[k]
            cs = seg[j]
            t = _segment_hit(a, b, poly.V[cs], poly.V[cs + 1])
            y = a + t * (b - a)
            sy, py, _, _ = poly.nearest(y[None, :])
            hits.append((y, float(poly.position(sy, py)[0]), j))
        last = (k, sg)
    ambiguous = False
    if len(hits) > 1:
        # crossings a few vertices apart are tangential wiggles, not distinct passes
        ambiguous = bool(np.any(np.diff([h[2] for h in hits]) < 4))
    return len(hits), ambiguous, hits


def unique_intersection_check(f: ComposedDiffeo, curves, wuu: ManifoldSegment) -> IntersectionLedger:
    """Crossings of every curve with W^uu(p), and the extreme positions a, b."""
    line = wuu.polyline()
    pL = wuu.base.point
    poly = _Polyline(line.vertices, line.center_index)
    step = wuu.branches[0].step
    entries, counts, amb = [], [], []
    for i, c in enumerate(curves):
        V = c.vertices - np.round(c.vertices[c.center_index] - pL)
        n, a_flag, hits = count_crossings(poly, V, step)
        counts.append(n)
        amb.append(a_flag)
        for y, pos, _ in hits:
            entries.append((i, y, pos))
    led = IntersectionLedger(wuu, entries, counts, amb, eps=f.eps)
    if entries:
        pos = np.array([e[2] for e in entries])
        ia, ib = int(np.argmin(pos)), int(np.argmax(pos))
        led.a, led.b = float(pos[ia]), float(pos[ib])
        led.point_a, led.point_b = entries[ia][1], entries[ib][1]
        led.d_a = torus_distance(led.point_a, pL)
        led.d_b = torus_distance(led.point_b, pL)
    return led


def forward_invariance_check(f: ComposedDiffeo, ledger: IntersectionLedger) -> dict:
    """Images of the ledger points stay on W^uu and move away from p."""
    line = ledger.wuu.polyline()
    pL = ledger.wuu.base.point
    poly = _Polyline(line.vertices, line.center_index)
    step = ledger.wuu.branches[0].step
    P = np.array([e[1] for e in ledger.entries]).reshape(-1, 2)
    pos = np.array([e[2] for e in ledger.entries])
    out = {"n_points": int(len(P))}
    fp = f.step(pL)[0]
    fp -= np.round(fp - pL)
    sp, tp, _, _ = poly.nearest(fp[None, :])
    out["p_position_after"] = _r(poly.position(sp, tp)[0])
    out["p_fixed"] = bool(np.array_equal(fp, pL))
    if len(P) == 0:
        out.update({"images_on_wuu": False, "strictly_expanding": False, "passed": False})
        return out
    Y = f.step(P)
    Y -= np.round(Y - pL)
    seg, par, dist, _ = poly.nearest(Y)
    new = poly.position(seg, par)
    # positions below the coordinate resolution at p cannot be compared
    res = 64 * np.spacing(max(np.abs(pL).max(), np.finfo(float).tiny))
    resolved = np.abs(pos) > res
    grow = np.abs(new[resolved]) > np.abs(pos[resolved])
    factor = np.abs(new[resolved]) / np.abs(pos[resolved])
    outer = np.abs(pos[resolved]) >= 0.5 * np.abs(pos[resolved]).max() if resolved.any() else np.array([], bool)
    out.update({
        "max_distance_to_wuu": _r(dist.max()),
        "bound_2step": _r(2 * step),
        "images_on_wuu": bool(dist.max() <= 2 * step),
        "resolved_points": int(resolved.sum()),
        "resolution": _r(res),
        "strictly_expanding": bool(grow.all()),
        "min_expansion_factor": _r(factor.min()) if factor.size else None,
        "min_expansion_outer_half": _r(factor[outer].min()) if outer.any() else None,
    })
    out["passed"] = out["images_on_wuu"] and out["strictly_expanding"] and out["p_fixed"]
    return out


# foliation witness

def _min_polyline_distance(V1, V2):
    best = np.inf
    for x in V1:
        best = min(best, float(point_segment_distances(V2, x)[0].min()))
    for x in V2:
        best = min(best, float(point_segment_distances(V1, x)[0].min()))
    return best


def foliation_violation_witness(f: ComposedDiffeo, report: ExperimentReport | None = None, **kw) -> dict:
    """Two basin curves on opposite sides of q's weak axis, disjoint near q, both through p."""
    rep = report if report is not None else lemma3_experiment(f, **kw)
    out = {"lemma3_verdict": rep.verdict, "statement": (
        "two E-curves from distinct basin points are disjoint near q and both pass through p; "
        "a foliation tangent to E would need one leaf through p containing both")}
    if rep.verdict != "PASS":
        out["found"] = False
        out["reason"] = "lemma3 experiment did not pass"
        return out
    site = find_site(f)
    ch = f.charts[site.chart_index]
    qoff = np.asarray(ch.inner_center_offset)
    ok = [k for k, s in enumerate(rep.samples) if s["passed"]]
    v2 = {k: float((f.lift_to_chart(ch, np.asarray(rep.samples[k]["point"])[None, :])[0] - qoff)[1]) for k in ok}
    pos = sorted((k for k in ok if v2[k] > 0), key=lambda k: -v2[k])
    neg = sorted((k for k in ok if v2[k] < 0), key=lambda k: v2[k])
    if not pos or not neg:
        out["found"] = False
        out["reason"] = "fewer than two passing samples on opposite sides of the weak axis"
        return out
    i, j = pos[0], neg[0]
    qL = site.q.point
    rho = 0.5 * torus_distance(site.p.point, qL)
    near = []
    sides = []
    for k in (i, j):
        c = rep.curves[k]
        V = c.vertices - np.round(c.vertices[c.center_index] - qL)
        m = np.hypot(*(V - qL).T) <= rho
        near.append(V[m])
        sides.append((f.lift_to_chart(ch, V[m]) - qoff)[:, 1])
    sep = _min_polyline_distance(near[0], near[1]) if len(near[0]) and len(near[1]) else float("nan")
    strict = bool(len(sides[0]) and len(sides[1]) and (sides[0] > 0).all() and (sides[1] < 0).all())
    step = rep.parameters["step"]
    out.update({
        "found": strict and rep.samples[i]["passed"] and rep.samples[j]["passed"],
        "curves": [int(i), int(j)],
        "points": [rep.samples[i]["point"], rep.samples[j]["point"]],
        "closest_approach_to_p": [rep.samples[i]["closest_approach"], rep.samples[j]["closest_approach"]],
        "near_q_radius": _r(rho),
        "min_separation_near_q": _r(sep),
        "opposite_sides_of_weak_axis": strict,
        "separation_exceeds_step": bool(sep > step),
    })
    return out


# remark and theorem

def remark_experiment(f: ComposedDiffeo, n_samples: int = 20, seed: int = 0) -> ExperimentReport:
    """The lemma3 protocol with the flip saddle q' as target."""
    rep = lemma3_experiment(f, n_samples, seed, target="q_prime", with_ledger=False, name="remark")
    return rep


def modified_region_gap(f: ComposedDiffeo) -> float:
    """Lower bound on the distance between the regions where f differs from f_A."""
    if len(f.charts) < 2:
        return math.inf
    radii = []
    for ch in f.charts:
        box = ch.support if ch.orientation == "forward" else ch.image_box
        radii.append(math.hypot(*box))
    best = math.inf
    for i in range(len(f.charts)):
        for j in range(i + 1, len(f.charts)):
            d = torus_distance(f.charts[i].center_float, f.charts[j].center_float)
            best = min(best, d - radii[i] - radii[j])
    return best


def locality_check(f: ComposedDiffeo, n: int = 100_000, seed: int = 0) -> dict:
    """f agrees bit-for-bit with the linear model away from every modified region."""
    rng = np.random.default_rng(seed)
    X = rng.random((n, 2))
    out_mask = ~f.in_modified_region(X)
    X = X[out_mask]
    A = np.asarray(f.base.A, dtype=float)
    lin = np.empty_like(X)
    lin[:, 0] = A[0, 0] * X[:, 0] + A[0, 1] * X[:, 1]
    lin[:, 1] = A[1, 0] * X[:, 0] + A[1, 1] * X[:, 1]
    from .torus import wrap_array
    same = np.array_equal(f.evaluate_array(X), wrap_array(lin))
    return {"points": int(len(X)), "exact": bool(same)}


def theorem_experiment(f: ComposedDiffeo, n_samples: int = 20, seed: int = 0) -> ExperimentReport:
    """Part A: E side at the forward site; part B: the same protocol for f^{-1}."""
    t0 = time.perf_counter()
    rep = ExperimentReport("theorem", f.label, f.mode, mapspec.spec_hash(f),
                           {"eps": _r(f.eps), "delta": _r(f.delta), "n_samples": int(n_samples), "seed": int(seed)},
                           notes=[LIMITATION])
    A = lemma3_experiment(f, n_samples, seed, name="part_A_E_curves")
    B = lemma3_experiment(f.inverse(), n_samples, seed, name="part_B_F_curves_under_inverse")
    rep.parts = {"A": A, "B": B}
    rep.details = {
        "modified_region_gap": _r(modified_region_gap(f)),
        "locality": locality_check(f, 10_000, seed),
    }
    if A.verdict == "INAPPLICABLE" or B.verdict == "INAPPLICABLE":
        rep.verdict = "INAPPLICABLE"
    else:
        rep.verdict = "PASS" if A.passed and B.passed else "FAIL"
    rep.timing = time.perf_counter() - t0
    return rep


# robustness

def certify(f: ComposedDiffeo, grid_n: int = 128) -> dict:
    K = f.base.lam ** 2
    c1 = check_lemma2_conditions(f, K, f.params.eta, f.eps, grid_n)
    c2 = check_cone_invariance(f, f.delta, grid_n)
    return {"lemma2": c1.as_dict(), "cones": c2.as_dict(), "passed": c1.passed and c2.passed}


def robustness_experiment(f: ComposedDiffeo, perturbation_magnitude: float, n_trials: int = 5, seed: int = 0,
                          n_samples: int = 20, radius: float = 0.002) -> ExperimentReport:
    """Re-certify and rerun the lemma3 protocol after small shear perturbations near W^uu(p)."""
    t0 = time.perf_counter()
    params = {"eps": _r(f.eps), "delta": _r(f.delta), "magnitude": _r(perturbation_magnitude),
              "n_trials": int(n_trials), "seed": int(seed), "n_samples": int(n_samples), "radius": _r(radius)}
    rep = ExperimentReport("robustness", f.label, f.mode, mapspec.spec_hash(f), params, notes=[LIMITATION])
    site = find_site(f) if f.charts else None
    if site is None:
        rep.verdict = "INAPPLICABLE"
        rep.details = {"reason": "no sink basin"}
        return rep
    rep.details["within_precondition"] = bool(perturbation_magnitude <= f.eps / 10)
    rng = np.random.default_rng([seed, 1])
    eu = f.base.frame[:, 1]
    uncertified = False
    for k in range(n_trials):
        t = rng.uniform(0.05, 0.08) * (1 if rng.random() < 0.5 else -1)
        center = site.p.point + t * eu
        trial = {"trial": k, "center": _pt(center), "offset_along_eu": _r(t)}
        try:
            g = perturbed(f, center, radius, perturbation_magnitude)
        except SurgeryError as e:
            trial.update({"outcome": "construction_failed", "reason": str(e), "passed": False})
            rep.samples.append(trial)
            continue
        cert = certify(g)
        trial["certified"] = cert["passed"]
        trial["certificate_margins"] = {**cert["lemma2"]["margins"], **cert["cones"]["margins"]}
        if not cert["passed"]:
            uncertified = True
            trial.update({"outcome": "outside certified neighborhood", "passed": False})
            rep.samples.append(trial)
            continue
        r = lemma3_experiment(g, n_samples, seed, with_ledger=False, name=f"trial_{k}")
        trial.update({"outcome": r.verdict, "map_hash": r.map_hash,
                      "max_closest_approach": r.details.get("closest_approach", {}).get("max"),
                      "n_basin_samples": r.details.get("n_basin_samples", 0), "passed": r.passed})
        rep.samples.append(trial)
    if all(s["passed"] for s in rep.samples):
        rep.verdict = "PASS"
    elif uncertified:
        rep.verdict = "OUTSIDE_CERTIFIED_NEIGHBORHOOD"
    else:
        rep.verdict = "FAIL"
    rep.timing = time.perf_counter() - t0
    return rep


# construction report

def construction_report(f: ComposedDiffeo, samples: int = 1000, seed: int = 0) -> dict:
    """The five example properties, itemised."""
    items = {}
    cert = certify(f)
    items["1_dominated_splitting"] = {"passed": cert["passed"], "margins": {
        **cert["lemma2"]["margins"], **cert["cones"]["margins"]}}
    ar = angle_report(f, samples, seed=seed)
    items["2_angle_bounds"] = {"passed": ar["passed"], "max_angle_E_es": ar["max_angle_E_es"],
                               "max_angle_F_eu": ar["max_angle_F_eu"], "delta": ar["delta"]}
    loc = locality_check(f, 100_000, seed)
    items["3_locality"] = {"passed": loc["exact"], **loc}
    site = find_site(f)
    if site is None:
        items["4_fixed_points"] = {"passed": False, "reason": "no double-DA site"}
        items["5_wuu_and_norm"] = {"passed": False, "reason": "no double-DA site"}
    else:
        recs = [r for r in find_fixed_points(f) if torus_distance(r.point, site.p.point) < f.eps]
        kinds = sorted(r.kind for r in recs)
        items["4_fixed_points"] = {
            "passed": site.p.kind == "source" and site.q.kind == "sink",
            "source_p": _pt(site.p.point), "sink_q": _pt(site.q.point),
            "kinds_in_ball": kinds,
        }
        step = default_step(f)
        w = grow_unstable_manifold(f, site.p, 0.1, step)
        lengths = w.branch_lengths()
        norm, _ = sup_norm_Df(f)
        items["5_wuu_and_norm"] = {
            "passed": all(abs(L - 0.1) <= step for L in lengths) and 2 * f.eps * norm < 0.1,
            "branch_lengths": [_r(v) for v in lengths], "step": _r(step),
            "sup_norm_Df": _r(norm), "two_eps_norm": _r(2 * f.eps * norm),
        }
    return {"schema": REPORT_SCHEMA, "map": {"label": f.label, "mode": f.mode, "hash": mapspec.spec_hash(f)},
            "properties": items, "passed": all(v["passed"] for v in items.values())}
