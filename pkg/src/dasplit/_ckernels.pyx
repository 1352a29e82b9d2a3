# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3, initializedcheck=False
"""Compiled map kernels; same contract as dasplit._kernels_py."""

import numpy as np
from libc.math cimport fabs, floor, rint, hypot, atan2, sqrt, INFINITY
from libc.stdlib cimport malloc, free

DEF MAX_ITER = 200
cdef double DBL_EPS = 2.220446049250313e-16


cdef class _Tab:
    cdef double[:, ::1] A, Ainv, center, lin, box, img, q, ilin, ibox, iimg
    cdef double[:, :, ::1] frame, R
    cdef long long[::1] orient, has_inner, prof_par, prof_off
    cdef long long[:, ::1] prof, iprof
    cdef double[::1] prof_h, sx0, sx1, ssa, ssb, sv0
    cdef double lam0, mu0
    cdef int n

    def __init__(self, T):
        c = lambda a: np.ascontiguousarray(a, dtype=np.float64)
        ci = lambda a: np.ascontiguousarray(a, dtype=np.int64)
        self.A = c(T.A)
        self.Ainv = c(T.Ainv)
        self.lam0 = T.lin0[0]
        self.mu0 = T.lin0[1]
        self.n = T.n_charts
        self.center = c(T.center).reshape(-1, 2)
        self.frame = c(T.frame).reshape(-1, 2, 2)
        self.R = c(T.R).reshape(-1, 2, 2)
        self.orient = ci(T.orient)
        self.lin = c(T.lin).reshape(-1, 2)
        self.box = c(T.box).reshape(-1, 2)
        self.img = c(T.img).reshape(-1, 2)
        self.prof = ci(T.prof).reshape(-1, 2)
        self.has_inner = ci(T.has_inner)
        self.q = c(T.q).reshape(-1, 2)
        self.ilin = c(T.ilin).reshape(-1, 2)
        self.ibox = c(T.ibox).reshape(-1, 2)
        self.iimg = c(T.iimg).reshape(-1, 2)
        self.iprof = ci(T.iprof).reshape(-1, 2)
        self.prof_h = c(T.prof_h)
        self.prof_par = ci(T.prof_par)
        self.prof_off = ci(T.prof_off)
        self.sx0 = c(T.seg_x0)
        self.sx1 = c(T.seg_x1)
        self.ssa = c(T.seg_sa)
        self.ssb = c(T.seg_sb)
        self.sv0 = c(T.seg_v0)


cdef _Tab _tab(T):
    tab = getattr(T, "_ctab", None)
    if tab is None:
        tab = _Tab(T)
        object.__setattr__(T, "_ctab", tab)
    return tab


cdef inline void _prof(_Tab T, long long j, double t, double* val, double* der) noexcept nogil:
    cdef double r = fabs(t)
    cdef long long o0, o1, k
    cdef double L, dx, tau, t2, v, d, sa, sb
    if r >= T.prof_h[j]:
        val[0] = 0.0
        der[0] = 0.0
        return
    o0 = T.prof_off[j]
    o1 = T.prof_off[j + 1]
    k = o0
    while k + 1 < o1 and T.sx0[k + 1] <= r:
        k += 1
    L = T.sx1[k] - T.sx0[k]
    dx = r - T.sx0[k]
    tau = dx / L
    t2 = tau * tau
    sa = T.ssa[k]
    sb = T.ssb[k]
    v = T.sv0[k] + (sa * dx + (sb - sa) * L * (t2 * t2 * (2.5 - 3.0 * tau + tau * tau)))
    d = sa + (sb - sa) * (tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau))
    if t < 0:
        if T.prof_par[j] < 0:
            v = -v
        else:
            d = -d
    val[0] = v
    der[0] = d


cdef int _solve(_Tab T, long long ja, double l, double b, double target, double h, double* out) noexcept nogil:
    cdef double lo = -h, hi = h, x, r, dd, xn, va, da, w1 = INFINITY, w2 = INFINITY
    cdef int it
    x = target / l
    if x < -h:
        x = -h
    if x > h:
        x = h
    for it in range(MAX_ITER):
        _prof(T, ja, x, &va, &da)
        r = l * x + va * b - target
        if r == 0.0:
            out[0] = x
            return 0
        if r < 0:
            lo = x
        else:
            hi = x
        dd = l + da * b
        xn = x - r / dd
        if not (xn > lo and xn < hi) or hi - lo > 0.5 * w2:
            xn = 0.5 * (lo + hi)
        w2 = w1
        w1 = hi - lo
        if (fabs(xn - x) <= 4 * DBL_EPS * max(fabs(x), fabs(xn))
                or hi - lo <= 4 * DBL_EPS * max(fabs(lo), fabs(hi)) or hi - lo <= DBL_EPS * h):
            out[0] = xn
            return 0
        x = xn
    out[0] = x
    return 1


cdef inline void _first_eval(_Tab T, int i, double u1, double u2, double* y) noexcept nogil:
    cdef double a, da, b, db, v1, v2
    _prof(T, T.prof[i, 0], u1, &a, &da)
    _prof(T, T.prof[i, 1], u2, &b, &db)
    y[0] = T.lin[i, 0] * u1 + a * b
    y[1] = T.lin[i, 1] * u2
    if T.has_inner[i]:
        v1 = u1 - T.q[i, 0]
        v2 = u2 - T.q[i, 1]
        if fabs(v1) <= T.ibox[i, 0] and fabs(v2) <= T.ibox[i, 1]:
            _prof(T, T.iprof[i, 0], v2, &a, &da)
            _prof(T, T.iprof[i, 1], v1, &b, &db)
            y[0] = T.q[i, 0] + T.ilin[i, 0] * v1
            y[1] = T.q[i, 1] + (T.ilin[i, 1] * v2 + a * b)


cdef inline void _first_jac(_Tab T, int i, double u1, double u2, double* J) noexcept nogil:
    cdef double a, da, b, db, v1, v2
    _prof(T, T.prof[i, 0], u1, &a, &da)
    _prof(T, T.prof[i, 1], u2, &b, &db)
    J[0] = T.lin[i, 0] + da * b
    J[1] = a * db
    J[2] = 0.0
    J[3] = T.lin[i, 1]
    if T.has_inner[i]:
        v1 = u1 - T.q[i, 0]
        v2 = u2 - T.q[i, 1]
        if fabs(v1) <= T.ibox[i, 0] and fabs(v2) <= T.ibox[i, 1]:
            _prof(T, T.iprof[i, 0], v2, &a, &da)
            _prof(T, T.iprof[i, 1], v1, &b, &db)
            J[0] = T.ilin[i, 0]
            J[1] = 0.0
            J[2] = a * db
            J[3] = T.ilin[i, 1] + da * b


cdef int _first_invert(_Tab T, int i, double w1, double w2, double* u) noexcept nogil:
    cdef double z1, z2, v1, v2, b, db, h, l1, l2
    cdef int err = 0
    if T.has_inner[i]:
        z1 = w1 - T.q[i, 0]
        z2 = w2 - T.q[i, 1]
        if fabs(z1) <= T.iimg[i, 0] and fabs(z2) <= T.iimg[i, 1]:
            v1 = z1 / T.ilin[i, 0]
            _prof(T, T.iprof[i, 1], v1, &b, &db)
            h = T.prof_h[T.iprof[i, 0]]
            v2 = z2 / T.ilin[i, 1]
            if b != 0 and fabs(z2) < T.ilin[i, 1] * h:
                err = _solve(T, T.iprof[i, 0], T.ilin[i, 1], b, z2, h, &v2)
            u[0] = T.q[i, 0] + v1
            u[1] = T.q[i, 1] + v2
            return err
    l1 = T.lin[i, 0]
    l2 = T.lin[i, 1]
    u[1] = w2 / l2
    u[0] = w1 / l1
    _prof(T, T.prof[i, 1], u[1], &b, &db)
    h = T.prof_h[T.prof[i, 0]]
    if b != 0 and fabs(w1) < l1 * h:
        err = _solve(T, T.prof[i, 0], l1, b, w1, h, &u[0])
    return err


cdef int _apply1(_Tab T, double x1, double x2, bint forward, double* Y) noexcept nogil:
    cdef double m00, m01, m10, m11, d1, d2, r1, r2, u1, u2, o1, o2
    cdef double y[2]
    cdef int i, err = 0
    cdef bint direct
    if forward:
        m00 = T.A[0, 0]; m01 = T.A[0, 1]; m10 = T.A[1, 0]; m11 = T.A[1, 1]
    else:
        m00 = T.Ainv[0, 0]; m01 = T.Ainv[0, 1]; m10 = T.Ainv[1, 0]; m11 = T.Ainv[1, 1]
    Y[0] = m00 * x1 + m01 * x2
    Y[1] = m10 * x1 + m11 * x2
    for i in range(T.n):
        d1 = x1 - T.center[i, 0]
        d2 = x2 - T.center[i, 1]
        r1 = rint(d1)
        r2 = rint(d2)
        d1 = d1 - r1
        d2 = d2 - r2
        u1 = d1 * T.frame[i, 0, 0] + d2 * T.frame[i, 1, 0]
        u2 = d1 * T.frame[i, 0, 1] + d2 * T.frame[i, 1, 1]
        direct = (T.orient[i] > 0) == forward
        if direct:
            if not (fabs(u1) <= T.box[i, 0] and fabs(u2) <= T.box[i, 1]):
                continue
            _first_eval(T, i, u1, u2, y)
        else:
            if not (fabs(u1) <= T.img[i, 0] and fabs(u2) <= T.img[i, 1]):
                continue
            err |= _first_invert(T, i, u1, u2, y)
        o1 = (T.center[i, 0] + r1) + (y[0] * T.frame[i, 0, 0] + y[1] * T.frame[i, 0, 1])
        o2 = (T.center[i, 1] + r2) + (y[0] * T.frame[i, 1, 0] + y[1] * T.frame[i, 1, 1])
        Y[0] = o1 + rint(Y[0] - o1)
        Y[1] = o2 + rint(Y[1] - o2)
        break
    return err


cdef int _jac1(_Tab T, double x1, double x2, double* J) noexcept nogil:
    cdef double d1, d2, u1, u2, det
    cdef double Jc[4]
    cdef double Ji[4]
    cdef double y[2]
    cdef double R00, R01, R10, R11, t00, t01, t10, t11
    cdef int i, err = 0
    J[0] = T.lam0; J[1] = 0.0; J[2] = 0.0; J[3] = T.mu0
    for i in range(T.n):
        d1 = x1 - T.center[i, 0]
        d2 = x2 - T.center[i, 1]
        d1 = d1 - rint(d1)
        d2 = d2 - rint(d2)
        u1 = d1 * T.frame[i, 0, 0] + d2 * T.frame[i, 1, 0]
        u2 = d1 * T.frame[i, 0, 1] + d2 * T.frame[i, 1, 1]
        if T.orient[i] > 0:
            if not (fabs(u1) <= T.box[i, 0] and fabs(u2) <= T.box[i, 1]):
                continue
            _first_jac(T, i, u1, u2, Jc)
        else:
            if not (fabs(u1) <= T.img[i, 0] and fabs(u2) <= T.img[i, 1]):
                continue
            err |= _first_invert(T, i, u1, u2, y)
            _first_jac(T, i, y[0], y[1], Ji)
            det = Ji[0] * Ji[3] - Ji[1] * Ji[2]
            Jc[0] = Ji[3] / det
            Jc[3] = Ji[0] / det
            Jc[1] = -Ji[1] / det
            Jc[2] = -Ji[2] / det
        R00 = T.R[i, 0, 0]; R01 = T.R[i, 0, 1]; R10 = T.R[i, 1, 0]; R11 = T.R[i, 1, 1]
        # R Jc R^T
        t00 = R00 * Jc[0] + R01 * Jc[2]
        t01 = R00 * Jc[1] + R01 * Jc[3]
        t10 = R10 * Jc[0] + R11 * Jc[2]
        t11 = R10 * Jc[1] + R11 * Jc[3]
        J[0] = t00 * R00 + t01 * R01
        J[1] = t00 * R10 + t01 * R11
        J[2] = t10 * R00 + t11 * R01
        J[3] = t10 * R10 + t11 * R11
        break
    return err


def step(T, X):
    cdef _Tab tab = _tab(T)
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64).reshape(-1, 2)
    out = np.empty((Xv.shape[0], 2))
    cdef double[:, ::1] Yv = out
    cdef Py_ssize_t k
    cdef int err = 0
    with nogil:
        for k in range(Xv.shape[0]):
            err |= _apply1(tab, Xv[k, 0], Xv[k, 1], True, &Yv[k, 0])
    if err:
        raise RuntimeError("chart inversion did not converge")
    return out


def step_inverse(T, X):
    cdef _Tab tab = _tab(T)
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64).reshape(-1, 2)
    out = np.empty((Xv.shape[0], 2))
    cdef double[:, ::1] Yv = out
    cdef Py_ssize_t k
    cdef int err = 0
    with nogil:
        for k in range(Xv.shape[0]):
            err |= _apply1(tab, Xv[k, 0], Xv[k, 1], False, &Yv[k, 0])
    if err:
        raise RuntimeError("chart inversion did not converge")
    return out


def jacobian(T, X):
    cdef _Tab tab = _tab(T)
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64).reshape(-1, 2)
    out = np.empty((Xv.shape[0], 2, 2))
    cdef double[:, :, ::1] Jv = out
    cdef Py_ssize_t k
    cdef int err = 0
    with nogil:
        for k in range(Xv.shape[0]):
            err |= _jac1(tab, Xv[k, 0], Xv[k, 1], &Jv[k, 0, 0])
    if err:
        raise RuntimeError("chart inversion did not converge")
    return out


cdef inline void _norm(double* v) noexcept nogil:
    cdef double n = hypot(v[0], v[1])
    v[0] /= n
    v[1] /= n


cdef void _transport(double* Js, int n, int which, double* v) noexcept nogil:
    # which == 0: apply inverses of Js[n-1], ..., Js[0]; else Js[n-1], ..., Js[0]
    cdef int k
    cdef double a, b, c, d, det, w0, w1
    for k in range(n - 1, -1, -1):
        a = Js[4 * k]; b = Js[4 * k + 1]; c = Js[4 * k + 2]; d = Js[4 * k + 3]
        if which == 0:
            det = a * d - b * c
            w0 = (d * v[0] - b * v[1]) / det
            w1 = (-c * v[0] + a * v[1]) / det
        else:
            w0 = a * v[0] + b * v[1]
            w1 = c * v[0] + d * v[1]
        v[0] = w0
        v[1] = w1
        _norm(v)


cdef int _bundle1(_Tab T, double x1, double x2, int which, int nmax, double tol, int n0,
                  double* orb, double* Js, double* V, double* resid, long long* used) noexcept nogil:
    cdef int n = n0 if n0 < nmax else nmax
    cdef int have_orb = 0, have_j = 0, err = 0
    cdef double vn[2]
    cdef double vm[2]
    cdef double c, s, r
    orb[0] = x1
    orb[1] = x2
    while True:
        while have_orb < n:
            err |= _apply1(T, orb[2 * have_orb], orb[2 * have_orb + 1], which == 0, &orb[2 * have_orb + 2])
            # keep orbit points in the unit cell so lifts do not grow like A^n
            orb[2 * have_orb + 2] -= rint(orb[2 * have_orb + 2])
            orb[2 * have_orb + 3] -= rint(orb[2 * have_orb + 3])
            have_orb += 1
        while have_j < n:
            if which == 0:
                err |= _jac1(T, orb[2 * have_j], orb[2 * have_j + 1], &Js[4 * have_j])
            else:
                err |= _jac1(T, orb[2 * have_j + 2], orb[2 * have_j + 3], &Js[4 * have_j])
            have_j += 1
        vn[0] = 1.0 if which == 0 else 0.0
        vn[1] = 0.0 if which == 0 else 1.0
        vm[0] = vn[0]
        vm[1] = vn[1]
        _transport(Js, n, which, vn)
        if n > 1:
            _transport(Js, n - 1, which, vm)
        c = fabs(vn[0] * vm[0] + vn[1] * vm[1])
        s = fabs(vn[0] * vm[1] - vn[1] * vm[0])
        r = atan2(s, c)
        V[0] = vn[0]
        V[1] = vn[1]
        resid[0] = r
        used[0] = n
        if r < tol or n >= nmax:
            break
        n = 2 * n if 2 * n < nmax else nmax
    if V[which] < 0:
        V[0] = -V[0]
        V[1] = -V[1]
    return err


def bundle(T, X, int which, int nmax=200, double tol=1e-10, int n0=8):
    cdef _Tab tab = _tab(T)
    cdef double[:, ::1] Xv = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64).reshape(-1, 2)
    cdef Py_ssize_t N = Xv.shape[0], k
    V = np.empty((N, 2))
    R = np.empty(N)
    U = np.empty(N, dtype=np.int64)
    cdef double[:, ::1] Vv = V
    cdef double[::1] Rv = R
    cdef long long[::1] Uv = U
    cdef double* orb = <double*> malloc(sizeof(double) * 2 * (nmax + 2))
    cdef double* Js = <double*> malloc(sizeof(double) * 4 * (nmax + 1))
    cdef int err = 0
    if orb == NULL or Js == NULL:
        free(orb)
        free(Js)
        raise MemoryError()
    try:
        with nogil:
            for k in range(N):
                err |= _bundle1(tab, Xv[k, 0], Xv[k, 1], which, nmax, tol, n0, orb, Js, &Vv[k, 0], &Rv[k], &Uv[k])
    finally:
        free(orb)
        free(Js)
    if err:
        raise RuntimeError("chart inversion did not converge")
    return V, R, U
