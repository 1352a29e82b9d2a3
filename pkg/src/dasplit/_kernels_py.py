"""Numpy implementation of the map kernels (fallback backend).

All functions take a ``MapTable`` and arrays of lifted points with shape
(N, 2).  Forward images are returned on the lift nearest to A @ X, so
orbits can be followed in the universal cover.
"""

from __future__ import annotations

import numpy as np

MAX_ITER = 200
_EPS = np.finfo(float).eps


def _S(t):
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def _IS(t):
    return t ** 4 * (2.5 - 3.0 * t + t * t)


def profile(T, j, t):
    """(value, derivative) of profile j at t."""
    t = np.asarray(t, dtype=float)
    r = np.abs(t)
    o0, o1 = T.prof_off[j], T.prof_off[j + 1]
    x0, x1 = T.seg_x0[o0:o1], T.seg_x1[o0:o1]
    sa, sb, v0 = T.seg_sa[o0:o1], T.seg_sb[o0:o1], T.seg_v0[o0:o1]
    k = np.clip(np.searchsorted(x0, r, side="right") - 1, 0, o1 - o0 - 1)
    L = x1[k] - x0[k]
    dx = r - x0[k]
    tau = dx / L
    val = v0[k] + (sa[k] * dx + (sb[k] - sa[k]) * L * _IS(tau))
    der = sa[k] + (sb[k] - sa[k]) * _S(tau)
    out = r >= T.prof_h[j]
    val = np.where(out, 0.0, val)
    der = np.where(out, 0.0, der)
    neg = t < 0
    if T.prof_par[j] < 0:
        val = np.where(neg, -val, val)
    else:
        der = np.where(neg, -der, der)
    return val, der


def _solve(T, ja, l, b, target, h):
    """Solve l*x + A(x)*b = target for x in [-h, h]; increasing in x."""
    lo = np.full_like(target, -h)
    hi = np.full_like(target, h)
    x = np.clip(target / l, -h, h)
    active = np.ones(target.shape, dtype=bool)
    w1 = np.full_like(target, np.inf)
    w2 = np.full_like(target, np.inf)
    for _ in range(MAX_ITER):
        if not active.any():
            break
        xa = x[active]
        va, da = profile(T, ja, xa)
        r = l * xa + va * b[active] - target[active]
        d = l + da * b[active]
        lo_a, hi_a = lo[active], hi[active]
        lo_a = np.where(r < 0, xa, lo_a)
        hi_a = np.where(r > 0, xa, hi_a)
        xn = xa - r / d
        # bisect when Newton leaves the bracket or the bracket fails to halve in two steps
        w_a = hi_a - lo_a
        bad = ~((xn > lo_a) & (xn < hi_a)) | (w_a > 0.5 * w2[active])
        xn = np.where(bad, 0.5 * (lo_a + hi_a), xn)
        done = (r == 0) | (np.abs(xn - xa) <= 4 * _EPS * np.maximum(np.abs(xa), np.abs(xn))) \
            | (w_a <= 4 * _EPS * np.maximum(np.abs(lo_a), np.abs(hi_a))) | (w_a <= _EPS * h)
        xn = np.where(r == 0, xa, xn)
        x[active] = xn
        lo[active], hi[active] = lo_a, hi_a
        w2[active] = w1[active]
        w1[active] = w_a
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    else:
        if active.any():
            raise RuntimeError("chart inversion did not converge")
    return x


def _first_eval(T, i, u):
    l1, l2 = T.lin[i]
    a, _ = profile(T, T.prof[i, 0], u[:, 0])
    b, _ = profile(T, T.prof[i, 1], u[:, 1])
    y = np.empty_like(u)
    y[:, 0] = l1 * u[:, 0] + a * b
    y[:, 1] = l2 * u[:, 1]
    if T.has_inner[i]:
        v = u - T.q[i]
        m = (np.abs(v[:, 0]) <= T.ibox[i, 0]) & (np.abs(v[:, 1]) <= T.ibox[i, 1])
        if m.any():
            vm = v[m]
            a2, _ = profile(T, T.iprof[i, 0], vm[:, 1])
            b2, _ = profile(T, T.iprof[i, 1], vm[:, 0])
            y[m, 0] = T.q[i, 0] + T.ilin[i, 0] * vm[:, 0]
            y[m, 1] = T.q[i, 1] + (T.ilin[i, 1] * vm[:, 1] + a2 * b2)
    return y


def _first_jac(T, i, u):
    l1, l2 = T.lin[i]
    a, da = profile(T, T.prof[i, 0], u[:, 0])
    b, db = profile(T, T.prof[i, 1], u[:, 1])
    J = np.zeros((len(u), 2, 2))
    J[:, 0, 0] = l1 + da * b
    J[:, 0, 1] = a * db
    J[:, 1, 1] = l2
    if T.has_inner[i]:
        v = u - T.q[i]
        m = (np.abs(v[:, 0]) <= T.ibox[i, 0]) & (np.abs(v[:, 1]) <= T.ibox[i, 1])
        if m.any():
            vm = v[m]
            a2, da2 = profile(T, T.iprof[i, 0], vm[:, 1])
            b2, db2 = profile(T, T.iprof[i, 1], vm[:, 0])
            Jm = np.zeros((len(vm), 2, 2))
            Jm[:, 0, 0] = T.ilin[i, 0]
            Jm[:, 1, 0] = a2 * db2
            Jm[:, 1, 1] = T.ilin[i, 1] + da2 * b2
            J[m] = Jm
    return J


def _first_invert(T, i, w):
    l1, l2 = T.lin[i]
    u = np.empty_like(w)
    u[:, 1] = w[:, 1] / l2
    u[:, 0] = w[:, 0] / l1
    done = np.zeros(len(w), dtype=bool)
    if T.has_inner[i]:
        z = w - T.q[i]
        m = (np.abs(z[:, 0]) <= T.iimg[i, 0]) & (np.abs(z[:, 1]) <= T.iimg[i, 1])
        if m.any():
            zm = z[m]
            al1, al2 = T.ilin[i]
            v1 = zm[:, 0] / al1
            b2, _ = profile(T, T.iprof[i, 1], v1)
            h2 = T.prof_h[T.iprof[i, 0]]
            v2 = zm[:, 1] / al2
            s = (b2 != 0) & (np.abs(zm[:, 1]) < al2 * h2)
            if s.any():
                v2[s] = _solve(T, T.iprof[i, 0], al2, b2[s], zm[s, 1], h2)
            u[m, 0] = T.q[i, 0] + v1
            u[m, 1] = T.q[i, 1] + v2
            done = m
    b, _ = profile(T, T.prof[i, 1], u[:, 1])
    h = T.prof_h[T.prof[i, 0]]
    s = ~done & (b != 0) & (np.abs(w[:, 0]) < l1 * h)
    if s.any():
        u[s, 0] = _solve(T, T.prof[i, 0], l1, b[s], w[s, 0], h)
    return u


def _chart_coords(T, i, X):
    d = X - T.center[i]
    r = np.round(d)
    d = d - r
    return d @ T.frame[i], T.center[i] + r


def _in_box(u, box):
    return (np.abs(u[:, 0]) <= box[0]) & (np.abs(u[:, 1]) <= box[1])


def _apply(T, X, forward):
    X = np.asarray(X, dtype=float)
    M = T.A if forward else T.Ainv
    Y = np.empty_like(X)
    Y[:, 0] = M[0, 0] * X[:, 0] + M[0, 1] * X[:, 1]
    Y[:, 1] = M[1, 0] * X[:, 0] + M[1, 1] * X[:, 1]
    for i in range(T.n_charts):
        u, c = _chart_coords(T, i, X)
        direct = (T.orient[i] > 0) == forward
        m = _in_box(u, T.box[i] if direct else T.img[i])
        if not m.any():
            continue
        um = u[m]
        y = _first_eval(T, i, um) if direct else _first_invert(T, i, um)
        out = c[m] + y @ T.frame[i].T
        Y[m] = out + np.round(Y[m] - out)
    return Y


def step(T, X):
    return _apply(T, X, True)


def step_inverse(T, X):
    return _apply(T, X, False)


def _inv2(J):
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    out = np.empty_like(J)
    out[:, 0, 0] = J[:, 1, 1] / det
    out[:, 1, 1] = J[:, 0, 0] / det
    out[:, 0, 1] = -J[:, 0, 1] / det
    out[:, 1, 0] = -J[:, 1, 0] / det
    return out


def jacobian(T, X):
    X = np.asarray(X, dtype=float)
    J = np.zeros((len(X), 2, 2))
    J[:, 0, 0] = T.lin0[0]
    J[:, 1, 1] = T.lin0[1]
    for i in range(T.n_charts):
        u, _ = _chart_coords(T, i, X)
        if T.orient[i] > 0:
            m = _in_box(u, T.box[i])
            if not m.any():
                continue
            Jc = _first_jac(T, i, u[m])
        else:
            m = _in_box(u, T.img[i])
            if not m.any():
                continue
            Jc = _inv2(_first_jac(T, i, _first_invert(T, i, u[m])))
        R = T.R[i]
        J[m] = R @ Jc @ R.T
    return J


def _normalize(V):
    n = np.hypot(V[:, 0], V[:, 1])
    return V / n[:, None], n


def _transport(Js, V, inverse):
    """Apply Js[k] (or their inverses) in order to rows of V, normalising each step."""
    for J in Js:
        if inverse:
            det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            W = np.stack([(J[:, 1, 1] * V[:, 0] - J[:, 0, 1] * V[:, 1]) / det,
                          (-J[:, 1, 0] * V[:, 0] + J[:, 0, 0] * V[:, 1]) / det], axis=1)
        else:
            W = np.einsum("nij,nj->ni", J, V)
        V, _ = _normalize(W)
    return V


def _angle(V, W):
    c = np.abs(V[:, 0] * W[:, 0] + V[:, 1] * W[:, 1])
    s = np.abs(V[:, 0] * W[:, 1] - V[:, 1] * W[:, 0])
    return np.arctan2(s, c)


def bundle(T, X, which, nmax=200, tol=1e-10, n0=8):
    """Dominated (which=0, E) or dominating (which=1, F) direction at lifted X.

    E: pull e_s back along the forward orbit; F: push e_u forward along the
    backward orbit.  Orbit length doubles from n0 until the directions from
    orbits of length n and n-1 agree to ``tol``.  Returns unit vectors in
    the global eigen-frame, the residual angle and the orbit length used.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N = len(X)
    seed = np.array([1.0, 0.0]) if which == 0 else np.array([0.0, 1.0])
    orbit = [X]
    jacs = []
    V = np.tile(seed, (N, 1))
    resid = np.full(N, np.inf)
    used = np.zeros(N, dtype=np.int64)
    done = np.zeros(N, dtype=bool)
    n = min(n0, nmax)
    while True:
        while len(orbit) <= n:
            Xk = orbit[-1]
            Y = step(T, Xk) if which == 0 else step_inverse(T, Xk)
            # keep orbit points in the unit cell so lifts do not grow like A^n
            orbit.append(Y - np.round(Y))
        while len(jacs) < n:
            k = len(jacs)
            # E uses Df at x_k; F uses Df at x_{-k-1} mapping to x_{-k}
            jacs.append(jacobian(T, orbit[k] if which == 0 else orbit[k + 1]))
        S = np.tile(seed, (N, 1))
        if which == 0:
            Vn = _transport(jacs[n - 1::-1], S, True)
            Vm = _transport(jacs[n - 2::-1], S, True) if n > 1 else S
        else:
            Vn = _transport(jacs[n - 1::-1], S, False)
            Vm = _transport(jacs[n - 2::-1], S, False) if n > 1 else S
        r = _angle(Vn, Vm)
        upd = ~done
        V[upd], resid[upd], used[upd] = Vn[upd], r[upd], n
        done |= r < tol
        if done.all() or n >= nmax:
            break
        n = min(2 * n, nmax)
    # orient: E by positive e_s component, F by positive e_u component
    sgn = np.where(V[:, which] < 0, -1.0, 1.0)
    return V * sgn[:, None], resid, used
