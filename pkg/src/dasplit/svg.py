"""Deterministic SVG 1.1 figures of lifted-plane scenes.

Coordinates are mapped affinely from a window in the lift to pixels and
written with six decimals; elements keep insertion order within a fixed
layer order, so identical inputs give identical bytes.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

LAYERS = ("outlines", "glyphs", "manifolds", "curves", "points")
STYLE = {
    "outlines": 'fill="none" stroke="#888888" stroke-width="1" stroke-dasharray="4 3"',
    "glyphs": 'stroke="#bbbbbb" stroke-width="1"',
    "manifolds": 'fill="none" stroke="#c0392b" stroke-width="2"',
    "curves": 'fill="none" stroke="#2c6fbb" stroke-width="1"',
    "points": 'stroke="#000000" stroke-width="1"',
}


class FigureError(ValueError):
    pass


def _f(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


class Figure:
    def __init__(self, window, width: int = 640, title: str = ""):
        x0, y0, x1, y1 = (float(v) for v in window)
        if not (x1 > x0 and y1 > y0):
            raise FigureError("empty window")
        self.window = (x0, y0, x1, y1)
        self.width = width
        self.height = max(1, int(round(width * (y1 - y0) / (x1 - x0))))
        self.height = min(self.height, 4 * width)
        self.title = title
        self.layers = {k: [] for k in LAYERS}

    def px(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        x0, y0, x1, y1 = self.window
        u = (X[:, 0] - x0) / (x1 - x0) * self.width
        v = self.height - (X[:, 1] - y0) / (y1 - y0) * self.height
        return np.stack([u, v], 1)

    def _layer(self, name):
        if name not in self.layers:
            raise FigureError(f"unknown layer {name!r}")
        return self.layers[name]

    def polyline(self, layer: str, X, min_px: float = 0.5):
        """Visible runs of X as polylines, thinned to min_px pixel spacing."""
        P = self.px(X)
        m = 0.05 * max(self.width, self.height)
        # a vertex is drawn when a segment touching it meets the (padded) view box
        lo, hi = np.minimum(P[:-1], P[1:]), np.maximum(P[:-1], P[1:])
        seg = (hi[:, 0] > -m) & (lo[:, 0] < self.width + m) & (hi[:, 1] > -m) & (lo[:, 1] < self.height + m)
        near = np.zeros(len(P), dtype=bool)
        if len(P) == 1:
            near[0] = (-m < P[0, 0] < self.width + m) and (-m < P[0, 1] < self.height + m)
        near[:-1] |= seg
        near[1:] |= seg
        idx = np.flatnonzero(near)
        if len(idx) == 0:
            return
        runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
        for run in runs:
            Q = P[run]
            keep = [0]
            for k in range(1, len(Q)):
                if k == len(Q) - 1 or np.hypot(*(Q[k] - Q[keep[-1]])) >= min_px:
                    keep.append(k)
            pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in Q[keep])
            self._layer(layer).append(f'<polyline points="{pts}"/>')

    def circle(self, layer: str, center, r: float):
        c = self.px(center)[0]
        x0, _, x1, _ = self.window
        rp = r / (x1 - x0) * self.width
        self._layer(layer).append(f'<circle cx="{_f(c[0])}" cy="{_f(c[1])}" r="{_f(rp)}"/>')

    def marker(self, x, label: str = "", fill: str = "#000000", size: float = 4.0):
        c = self.px(x)[0]
        el = f'<circle cx="{_f(c[0])}" cy="{_f(c[1])}" r="{_f(size)}" fill="{fill}"/>'
        if label:
            el += (f'<text x="{_f(c[0] + size + 2)}" y="{_f(c[1] - size - 2)}" font-size="12" '
                   f'font-family="sans-serif" stroke="none">{escape(label)}</text>')
        self._layer("points").append(el)

    def glyph(self, x, v, length_px: float = 8.0):
        c = self.px(x)[0]
        d = np.array([v[0], -v[1]], dtype=float)
        d = d / np.hypot(*d) * 0.5 * length_px
        a, b = c - d, c + d
        self._layer("glyphs").append(f'<line x1="{_f(a[0])}" y1="{_f(a[1])}" x2="{_f(b[0])}" y2="{_f(b[1])}"/>')

    def render(self) -> str:
        W, H = self.width, self.height
        x0, y0, x1, y1 = self.window
        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H + 40}" '
            f'viewBox="0 0 {W} {H + 40}">',
        ]
        if self.title:
            out.append(f"<title>{escape(self.title)}</title>")
        out.append(f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff" stroke="#000000" stroke-width="1"/>')
        out.append(f'<g font-size="11" font-family="sans-serif" fill="#000000">')
        out.append(f'<text x="2" y="{H + 14}">x1: [{x0:.6g}, {x1:.6g}]</text>')
        out.append(f'<text x="2" y="{H + 30}">x2: [{y0:.6g}, {y1:.6g}]</text>')
        out.append("</g>")
        out.append(f'<clipPath id="view"><rect x="0" y="0" width="{W}" height="{H}"/></clipPath>')
        for name in LAYERS:
            els = self.layers[name]
            if not els:
                continue
            out.append(f'<g id="{name}" clip-path="url(#view)" {STYLE[name]}>')
            out.extend(els)
            out.append("</g>")
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> str:
        text = self.render()
        with open(path, "w") as fh:
            fh.write(text)
        return text


def read_curve_csv(path) -> np.ndarray:
    """Lifted vertices from a curve CSV written by TorusCurve.to_csv."""
    with open(path) as fh:
        head = fh.readline().strip().split(",")
        if "lifted_x1" not in head:
            raise FigureError(f"{path}: not a curve CSV")
        i, j = head.index("lifted_x1"), head.index("lifted_x2")
        rows = [line.split(",") for line in fh if line.strip()]
    return np.array([[float(r[i]), float(r[j])] for r in rows]).reshape(-1, 2)


def bounding_window(arrays, pad: float = 0.05):
    P = np.concatenate([np.atleast_2d(a) for a in arrays])
    lo, hi = P.min(axis=0), P.max(axis=0)
    span = max(float((hi - lo).max()), 1e-300)
    c = 0.5 * (lo + hi)
    h = 0.5 * span * (1 + 2 * pad)
    return (c[0] - h, c[1] - h, c[0] + h, c[1] + h)
