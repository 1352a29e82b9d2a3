"""Flat map tables and backend selection for the hot kernels.

The compiled extension ``dasplit._ckernels`` is used when it imports; the
numpy implementation in ``dasplit._kernels_py`` is the fallback.  Set
``DASPLIT_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _kernels_py


@dataclass(frozen=True)
class MapTable:
    A: np.ndarray  # (2, 2) base matrix
    Ainv: np.ndarray
    lin0: np.ndarray  # (2,) diag of the base in its own eigen-frame
    n_charts: int
    center: np.ndarray  # (n, 2)
    frame: np.ndarray  # (n, 2, 2) columns are chart axes
    R: np.ndarray  # (n, 2, 2) chart axes in the global eigen-frame
    orient: np.ndarray  # (n,) +1 forward, -1 inverse
    lin: np.ndarray  # (n, 2)
    box: np.ndarray  # (n, 2)
    img: np.ndarray  # (n, 2)
    prof: np.ndarray  # (n, 2) profile ids (A, B)
    has_inner: np.ndarray  # (n,)
    q: np.ndarray  # (n, 2)
    ilin: np.ndarray
    ibox: np.ndarray
    iimg: np.ndarray
    iprof: np.ndarray
    prof_h: np.ndarray  # (m,)
    prof_par: np.ndarray  # (m,) +1 even, -1 odd
    prof_off: np.ndarray  # (m + 1,)
    seg_x0: np.ndarray
    seg_x1: np.ndarray
    seg_sa: np.ndarray
    seg_sb: np.ndarray
    seg_v0: np.ndarray


def build_table(f) -> MapTable:
    profiles = []

    def pid(p):
        profiles.append(p)
        return len(profiles) - 1

    n = len(f.charts)
    center = np.zeros((n, 2))
    frame = np.zeros((n, 2, 2))
    R = np.zeros((n, 2, 2))
    orient = np.zeros(n, dtype=np.int64)
    lin, box, img = np.zeros((n, 2)), np.zeros((n, 2)), np.zeros((n, 2))
    prof = np.zeros((n, 2), dtype=np.int64)
    has_inner = np.zeros(n, dtype=np.int64)
    q, ilin, ibox, iimg = np.zeros((n, 2)), np.ones((n, 2)), np.zeros((n, 2)), np.zeros((n, 2))
    iprof = np.zeros((n, 2), dtype=np.int64)
    for i, ch in enumerate(f.charts):
        center[i] = ch.center_float
        frame[i] = ch.frame
        Ri = f.base.frame.T @ ch.frame
        # chart frames are the base frame or its swap; keep R an exact permutation
        R[i] = np.round(Ri) if np.allclose(np.abs(Ri), np.round(np.abs(Ri)), atol=1e-12) else Ri
        orient[i] = 1 if ch.orientation == "forward" else -1
        lin[i] = ch.lin
        box[i] = ch.support
        img[i] = ch.image_box
        prof[i] = (pid(ch.alpha), pid(ch.beta))
        if ch.inner is not None:
            has_inner[i] = 1
            q[i] = ch.inner_center_offset
            ilin[i] = ch.inner.lin
            ibox[i] = ch.inner.support
            iimg[i] = ch.inner.image_box
            iprof[i] = (pid(ch.inner.alpha), pid(ch.inner.beta))
    prof_off = [0]
    x0, x1, sa, sb, v0 = [], [], [], [], []
    for p in profiles:
        k = len(p.slope_start)
        x0 += list(p.knots[:-1])
        x1 += list(p.knots[1:])
        sa += list(p.slope_start)
        sb += list(p.slope_end)
        v0 += list(p.value_start)
        prof_off.append(prof_off[-1] + k)
    arr = lambda v: np.ascontiguousarray(np.asarray(v, dtype=float))
    return MapTable(
        A=np.asarray(f.base.A, dtype=float),
        Ainv=np.round(np.linalg.inv(np.asarray(f.base.A, dtype=float))),
        lin0=np.array([f.base.lam, f.base.mu]),
        n_charts=n,
        center=center, frame=frame, R=R, orient=orient, lin=lin, box=box, img=img, prof=prof,
        has_inner=has_inner, q=q, ilin=ilin, ibox=ibox, iimg=iimg, iprof=iprof,
        prof_h=arr([p.half_support for p in profiles]),
        prof_par=np.asarray([p.parity for p in profiles], dtype=np.int64),
        prof_off=np.asarray(prof_off, dtype=np.int64),
        seg_x0=arr(x0), seg_x1=arr(x1), seg_sa=arr(sa), seg_sb=arr(sb), seg_v0=arr(v0),
    )


def in_modified_region(t: MapTable, X: np.ndarray) -> np.ndarray:
    """True where f or f^{-1} may differ from the linear model."""
    out = np.zeros(len(X), dtype=bool)
    for i in range(t.n_charts):
        d = X - t.center[i]
        d -= np.round(d)
        u = d @ t.frame[i]
        hb = np.maximum(t.box[i], t.img[i])
        out |= (np.abs(u[:, 0]) <= hb[0]) & (np.abs(u[:, 1]) <= hb[1])
    return out


def _load_backend():
    if os.environ.get("DASPLIT_BACKEND", "").lower() == "python":
        return _kernels_py
    try:
        from . import _ckernels
    except ImportError:
        return _kernels_py
    return _ckernels


backend = _load_backend()
python_backend = _kernels_py


def backend_name() -> str:
    return "compiled" if backend is not _kernels_py else "python"
