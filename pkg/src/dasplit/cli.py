"""dasplit command line.

Exit codes: 0 pass, 1 check or experiment failure, 2 inapplicable,
3 input error.  DASPLIT_OUTPUT_DIR sets the default output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import mapspec
from .dynamics import (
    DynamicsError,
    export_fixed_points_json,
    find_fixed_points,
    trace_integral_curve,
)
from .splitting import bundle_vectors, check_cone_invariance, check_lemma2_conditions, export_bundles_csv
from .surgery import (
    DEMO_EPS,
    SurgeryError,
    build_example_map,
    build_linear_map,
    build_theorem_map,
)
from .svg import LAYERS, Figure, FigureError, bounding_window, read_curve_csv

EXIT_PASS, EXIT_FAIL, EXIT_INAPPLICABLE, EXIT_INPUT = 0, 1, 2, 3
OUTPUT_ENV = "DASPLIT_OUTPUT_DIR"


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def output_dir(arg: str | None) -> Path:
    d = Path(arg or os.environ.get(OUTPUT_ENV, "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load(path) -> "ex.ComposedDiffeo":
    try:
        return mapspec.load(path)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e
    except mapspec.SpecError as e:
        raise InputError(f"{path}: {e}") from e


def _verdict_code(verdict: str) -> int:
    return {"PASS": EXIT_PASS, "INAPPLICABLE": EXIT_INAPPLICABLE}.get(verdict, EXIT_FAIL)


def _map_info(f) -> dict:
    return {"label": f.label, "mode": f.mode, "hash": mapspec.spec_hash(f)}


# commands

def cmd_build(a) -> int:
    try:
        if a.linear:
            f = build_linear_map()
        elif a.theorem:
            f = build_theorem_map(eps=a.eps, mode=a.mode)
        else:
            f = build_example_map(eps=a.eps, mode=a.mode)
    except SurgeryError as e:
        raise InputError(str(e)) from e
    out = Path(a.out) if a.out else output_dir(None) / f"{f.label}-{f.mode}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    mapspec.save(f, out)
    print(f"wrote {out} (eps={f.eps:.17g}, hash={mapspec.spec_hash(f)[:12]})")
    if a.no_report or not f.charts:
        return EXIT_PASS
    rep = ex.construction_report(f, seed=a.seed)
    rpath = out.with_suffix(".construction.json")
    _write_json(rpath, rep)
    for name, item in rep["properties"].items():
        print(f"  {name}: {'ok' if item['passed'] else 'FAILED'}")
    return EXIT_PASS if rep["passed"] else EXIT_FAIL


def cmd_certify(a) -> int:
    f = _load(a.spec)
    K = f.base.lam ** 2 if a.K is None else a.K
    eta = f.params.eta if a.eta is None else a.eta
    eps = (f.eps or DEMO_EPS) if a.eps is None else a.eps
    delta = f.delta if a.delta is None else a.delta
    try:
        c1 = check_lemma2_conditions(f, K, eta, eps, a.grid_n)
        c2 = check_cone_invariance(f, delta, a.grid_n)
    except ValueError as e:
        raise InputError(str(e)) from e
    ok = c1.passed and c2.passed
    rep = {"schema": 1, "map": _map_info(f), "lemma2": c1.as_dict(), "cones": c2.as_dict(), "passed": ok}
    if a.out:
        _write_json(Path(a.out), rep)
    for c in (c1, c2):
        for name, v in c.verdicts.items():
            line = f"  {name}: margin {c.margins[name]:.6g} {'ok' if v else 'FAILED'}"
            if not v:
                line += f" at {c.witnesses[name]['point']}"
            print(line)
    return EXIT_PASS if ok else EXIT_FAIL


def _points_arg(a) -> np.ndarray:
    if a.point:
        return np.array(a.point, dtype=float)
    g = (np.arange(a.grid) + 0.5) / a.grid
    return np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)


def cmd_bundles(a) -> int:
    f = _load(a.spec)
    X = _points_arg(a)
    out = Path(a.out) if a.out else output_dir(None) / "bundles.csv"
    export_bundles_csv(f, X, out)
    print(f"wrote {out} ({len(X)} points)")
    return EXIT_PASS


def cmd_fixed_points(a) -> int:
    f = _load(a.spec)
    try:
        recs = find_fixed_points(f, a.grid_n)
    except ValueError as e:
        raise InputError(str(e)) from e
    out = Path(a.out) if a.out else output_dir(None) / "fixed_points.json"
    export_fixed_points_json(recs, out)
    for r in recs:
        ev = ", ".join(f"{abs(e):.9g}" for e in r.eigenvalues)
        print(f"  {r.kind:8s} ({r.location.x1:.12g}, {r.location.x2:.12g})  |ev| = {ev}")
    return EXIT_PASS


def cmd_trace(a) -> int:
    f = _load(a.spec)
    eps = f.eps or DEMO_EPS
    half = 1.5 * eps if a.half_length is None else a.half_length
    step = eps / 500 if a.step is None else a.step
    c = trace_integral_curve(f, np.array(a.point, dtype=float), a.bundle, half, step)
    out = Path(a.out) if a.out else output_dir(None) / f"{a.bundle}_curve.csv"
    c.to_csv(out)
    print(f"wrote {out} ({len(c.vertices)} vertices, length {c.length:.9g})")
    return EXIT_FAIL if c.flags.get("aborted") else EXIT_PASS


def _write_curves(d: Path, prefix: str, rep) -> None:
    for k, c in enumerate(rep.curves):
        c.to_csv(d / f"{prefix}_curve_{k:03d}.csv")
    if rep.ledger is not None:
        rep.ledger.wuu.polyline().to_csv(d / f"{prefix}_wuu.csv")


def cmd_experiment(a) -> int:
    f = _load(a.spec)
    d = output_dir(a.out_dir)
    if a.which == "lemma3":
        rep = ex.lemma3_experiment(f, a.n_samples, a.seed)
        if rep.ledger is not None:
            rep.details["forward_invariance"] = ex.forward_invariance_check(f, rep.ledger)
            rep.details["foliation_witness"] = ex.foliation_violation_witness(f, rep)
        _write_curves(d, "lemma3", rep)
    elif a.which == "remark":
        rep = ex.remark_experiment(f, a.n_samples, a.seed)
        _write_curves(d, "remark", rep)
    elif a.which == "theorem":
        rep = ex.theorem_experiment(f, a.n_samples, a.seed)
        for name, part in rep.parts.items():
            _write_curves(d, f"theorem_{name}", part)
    else:
        mag = f.eps / 20 if a.magnitude is None else a.magnitude
        rep = ex.robustness_experiment(f, mag, a.trials, a.seed, a.n_samples)
    path = d / f"{a.which}.json"
    path.write_text(rep.to_json())
    print(f"{a.which}: {rep.verdict} ({rep.timing:.1f} s) -> {path}")
    if rep.verdict == "INAPPLICABLE":
        print(f"  reason: {rep.details.get('reason', 'a part is inapplicable')}")
    return _verdict_code(rep.verdict)


def _scene_from_json(path: Path, obj) -> tuple[list, list]:
    """(markers, outlines) from an experiment report or a fixed-point file."""
    markers, outlines = [], []
    if "fixed_points" in obj:
        for r in obj["fixed_points"]:
            markers.append((np.array([float(v) for v in r["lift"]]), r["kind"]))
        return markers, outlines
    rep = obj
    if "site" not in rep.get("details", {}) and rep.get("parts"):
        rep = rep["parts"][sorted(rep["parts"])[0]]
    site = rep.get("details", {}).get("site")
    if site is None:
        raise InputError(f"{path}: no site data to plot")
    markers.append((np.array(site["p"]), "p"))
    markers.append((np.array(site["q"]), "q"))
    eps = rep["parameters"]["eps"]
    outlines.append((np.array(site["p"]), eps))
    return markers, outlines


def cmd_plot(a) -> int:
    layers = tuple(s for s in a.layers.split(",") if s) if a.layers is not None else LAYERS
    for s in layers:
        if s not in LAYERS:
            raise InputError(f"unknown layer {s!r}; choose from {', '.join(LAYERS)}")
    curves, manifolds, markers, outlines = [], [], [], []
    for p in a.inputs:
        path = Path(p)
        try:
            text = path.read_text()
        except OSError as e:
            raise InputError(f"cannot read {p}: {e.strerror}") from e
        if path.suffix == ".csv":
            try:
                V = read_curve_csv(path)
            except (FigureError, ValueError, IndexError) as e:
                raise InputError(str(e)) from e
            (manifolds if ("wuu" in path.name or "manifold" in path.name) else curves).append(V)
        elif path.suffix == ".json":
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as e:
                raise InputError(f"{p}: not JSON") from e
            m, o = _scene_from_json(path, obj)
            markers += m
            outlines += o
        else:
            raise InputError(f"{p}: expected .csv or .json")
    if a.window:
        window = a.window
    else:
        pts = [V for V in curves] + [m[0][None, :] for m in markers]
        pts += [np.array([c - r, c + r]) for c, r in outlines]
        if not pts:
            pts = manifolds or [np.array([[0.0, 0.0], [1.0, 1.0]])]
        window = bounding_window(pts)
    try:
        fig = Figure(window, a.width, a.title)
    except FigureError as e:
        raise InputError(str(e)) from e
    if "outlines" in layers:
        for c, r in outlines:
            fig.circle("outlines", c, r)
    if "glyphs" in layers and a.spec and a.glyphs:
        f = _load(a.spec)
        x0, y0, x1, y1 = fig.window
        gx = x0 + (np.arange(a.glyphs) + 0.5) / a.glyphs * (x1 - x0)
        gy = y0 + (np.arange(a.glyphs) + 0.5) / a.glyphs * (y1 - y0)
        G = np.stack(np.meshgrid(gx, gy, indexing="ij"), -1).reshape(-1, 2)
        V, _, _ = bundle_vectors(f, G, a.glyph_bundle)
        for x, v in zip(G, V @ f.base.frame.T):
            fig.glyph(x, v)
    if "manifolds" in layers:
        for V in manifolds:
            fig.polyline("manifolds", V)
    if "curves" in layers:
        for V in curves:
            fig.polyline("curves", V)
    if "points" in layers:
        for x, label in markers:
            fig.marker(x, label)
    out = Path(a.out) if a.out else output_dir(None) / "figure.svg"
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.save(out)
    print(f"wrote {out}")
    return EXIT_PASS


# parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dasplit", description="DA surgeries on the 2-torus and their dominated splittings")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="build a map and write its spec file")
    g = b.add_mutually_exclusive_group()
    g.add_argument("--example", action="store_true", help="single double-DA site at the origin (default)")
    g.add_argument("--theorem", action="store_true", help="sites at (0,0) and (1/5,2/5)")
    g.add_argument("--linear", action="store_true", help="the unmodified automorphism")
    b.add_argument("--mode", choices=("demo", "strict"), default="demo")
    b.add_argument("--eps", type=float, help="override the surgery radius")
    b.add_argument("--out", help="spec path (default <outdir>/<label>-<mode>.json)")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--no-report", action="store_true", help="skip the construction report")
    b.set_defaults(func=cmd_build)

    c = sub.add_parser("certify", help="domination and cone certificates")
    c.add_argument("spec")
    c.add_argument("--K", type=float, help="diagonal lower bound (default lambda^2)")
    c.add_argument("--eta", type=float, help="domination ratio (default from the spec)")
    c.add_argument("--eps", type=float, help="off-diagonal bound (default the spec's eps)")
    c.add_argument("--delta", type=float, help="cone half-angle (default from the spec)")
    c.add_argument("--grid-n", type=int, default=128)
    c.add_argument("--out", help="certificate JSON path")
    c.set_defaults(func=cmd_certify)

    for name, fn, helptext in (("bundles", cmd_bundles, "E and F directions to CSV"),):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("spec")
        s.add_argument("--point", nargs=2, type=float, action="append", metavar=("X1", "X2"))
        s.add_argument("--grid", type=int, default=16, help="uniform grid size when no --point is given")
        s.add_argument("--out")
        s.set_defaults(func=fn)

    fp = sub.add_parser("fixed-points", help="fixed-point census to JSON")
    fp.add_argument("spec")
    fp.add_argument("--grid-n", type=int, default=256)
    fp.add_argument("--out")
    fp.set_defaults(func=cmd_fixed_points)

    t = sub.add_parser("trace", help="trace one E- or F-curve to CSV")
    t.add_argument("spec")
    t.add_argument("--point", nargs=2, type=float, required=True, metavar=("X1", "X2"))
    t.add_argument("--bundle", choices=("E", "F"), default="E")
    t.add_argument("--half-length", type=float)
    t.add_argument("--step", type=float)
    t.add_argument("--out")
    t.set_defaults(func=cmd_trace)

    e = sub.add_parser("experiment", help="run a reproduction experiment")
    e.add_argument("spec")
    e.add_argument("which", choices=("lemma3", "remark", "theorem", "robustness"))
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--n-samples", type=int, default=20)
    e.add_argument("--out-dir")
    e.add_argument("--magnitude", type=float, help="robustness shear size (default eps/20)")
    e.add_argument("--trials", type=int, default=5)
    e.set_defaults(func=cmd_experiment)

    pl = sub.add_parser("plot", help="SVG figure from curve CSVs and report JSONs")
    pl.add_argument("inputs", nargs="*")
    pl.add_argument("--out")
    pl.add_argument("--window", nargs=4, type=float, metavar=("X0", "Y0", "X1", "Y1"))
    pl.add_argument("--layers", help=f"comma list from {','.join(LAYERS)}")
    pl.add_argument("--spec", help="map spec for direction-field glyphs")
    pl.add_argument("--glyphs", type=int, default=0, help="glyph grid size")
    pl.add_argument("--glyph-bundle", choices=("E", "F"), default="E")
    pl.add_argument("--width", type=int, default=640)
    pl.add_argument("--title", default="")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    try:
        return a.func(a)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (SurgeryError, DynamicsError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
