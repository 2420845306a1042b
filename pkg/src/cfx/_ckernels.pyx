# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the interval maps h, k, r, a, v.

Each step reproduces the scalar reference in cfx.maps: same guards in the
same order, same reduction, same canonical sign of the branch matrix.
Status codes: 0 ok, 1 zero/pole, 2 discontinuity, 3 fixed point,
4 unbounded, 5 outside the interval.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ceil, fabs, log, sqrt, isfinite

cnp.import_array()

DEF CANON_TOL = 1e-12

# params layout (see cfx.kernels.build_params)
DEF P_LAM = 0
DEF P_MU = 1
DEF P_ALPHA = 2
DEF P_TOL = 3
DEF P_PARC = 4
DEF P_UA = 5   # U   = (ua, ub; uc, ud)
DEF P_UIA = 9  # U^-1


cdef struct Step:
    double a, b, c, d, image, tau
    int status


cdef inline void _canon(Step* s) noexcept nogil:
    cdef double det = s.a * s.d - s.b * s.c
    cdef double r = sqrt(fabs(det))
    s.a /= r; s.b /= r; s.c /= r; s.d /= r
    if not (s.c > CANON_TOL or (fabs(s.c) <= CANON_TOL and s.d > 0)):
        s.a = -s.a; s.b = -s.b; s.c = -s.c; s.d = -s.d


cdef inline void _finish(Step* s, double x) noexcept nogil:
    _canon(s)
    cdef double den = s.c * x + s.d
    if den == 0.0:
        s.status = 1
        return
    s.tau = -2.0 * log(fabs(den))
    s.status = 0


cdef inline double _reduce(double y, double period, long* p) noexcept nogil:
    cdef double half = period / 2.0
    cdef long k = <long>(-floor(y / period + 0.5))
    cdef double z = y + k * period
    if z < -half:
        k += 1
        z = y + k * period
    elif z >= half:
        k -= 1
        z = y + k * period
    p[0] = k
    return z


cdef inline bint _outside(double x, double lo, double hi, double tol) noexcept nogil:
    return (not isfinite(x)) or x < lo - tol or x > hi + tol


cdef Step _h(double x, const double* prm) noexcept nogil:
    cdef Step s
    cdef double lam = prm[P_LAM], tol = prm[P_TOL]
    cdef long p
    s.status = 0
    if _outside(x, -lam / 2, lam / 2, tol):
        s.status = 5
        return s
    if fabs(x) <= tol:
        s.status = 1
        return s
    s.image = _reduce(-1.0 / x, lam, &p)
    s.a = p * lam; s.b = -1.0; s.c = 1.0; s.d = 0.0
    _finish(&s, x)
    return s


cdef Step _k(double x, const double* prm) noexcept nogil:
    cdef Step s
    cdef double mu = prm[P_MU], tol = prm[P_TOL]
    cdef double ba, bb, bc, bd, den
    cdef long p
    cdef int o
    s.status = 0
    if _outside(x, -mu / 2, mu / 2, tol):
        s.status = 5
        return s
    if fabs(x) <= tol:
        s.status = 1
        return s
    o = P_UIA if x > 0 else P_UA
    ba = prm[o]; bb = prm[o + 1]; bc = prm[o + 2]; bd = prm[o + 3]
    den = bc * x + bd
    if fabs(den) <= tol:
        s.status = 4
        return s
    s.image = _reduce((ba * x + bb) / den, mu, &p)
    s.a = ba + p * mu * bc; s.b = bb + p * mu * bd; s.c = bc; s.d = bd
    _finish(&s, x)
    return s


cdef Step _r(double x, const double* prm) noexcept nogil:
    cdef Step s1 = _k(x, prm)
    if s1.status != 0:
        return s1
    cdef Step s2 = _k(s1.image, prm)
    if s2.status != 0:
        return s2
    cdef Step s
    s.a = s2.a * s1.a + s2.b * s1.c
    s.b = s2.a * s1.b + s2.b * s1.d
    s.c = s2.c * s1.a + s2.d * s1.c
    s.d = s2.c * s1.b + s2.d * s1.d
    s.image = s2.image
    _canon(&s)
    s.tau = s1.tau + s2.tau
    s.status = 0
    return s


cdef Step _additive(double x, const double* prm, const double* rtab, int nr,
                    const double* disc, int nd) noexcept nogil:
    cdef Step s
    cdef double mu = prm[P_MU], tol = prm[P_TOL]
    cdef double ra, rb, rc, rd, den, y
    cdef long k
    cdef int i, j
    s.status = 0
    for i in range(nd):
        if fabs(x - disc[i]) <= tol:
            s.status = 2
            return s
    for j in range(nr):
        ra = rtab[4 * j]; rb = rtab[4 * j + 1]; rc = rtab[4 * j + 2]; rd = rtab[4 * j + 3]
        den = rc * x + rd
        if fabs(den) <= tol:
            s.status = 4
            return s
        y = (ra * x + rb) / den
        if fabs(y) > mu / 2:
            s.image = _reduce(y, mu, &k)
            s.a = ra + k * mu * rc; s.b = rb + k * mu * rd; s.c = rc; s.d = rd
            _finish(&s, x)
            return s
    s.status = 2
    return s


cdef Step _a(double x, const double* prm, const double* rtab, int nr,
             const double* disc, int nd) noexcept nogil:
    cdef Step s
    cdef double mu = prm[P_MU]
    if _outside(x, -mu / 2, mu / 2, prm[P_TOL]):
        s.status = 5
        return s
    return _additive(x, prm, rtab, nr, disc, nd)


cdef inline double _parabolic_image(double x, double ell, const double* prm) noexcept nogil:
    # (P R^-1)^ell . x via 1/(y - mu/2) = 1/(x - mu/2) + ell*c
    cdef double h = prm[P_MU] / 2.0
    return h + 1.0 / (1.0 / (x - h) + ell * prm[P_PARC])


cdef int _accelerate(double x, const double* prm, long* ell_out, double* img) noexcept nogil:
    cdef double mu = prm[P_MU], al = prm[P_ALPHA]
    cdef double val = (mu * mu + 4.0) / mu / (mu - 2.0 * al) * (x - al) / (mu - 2.0 * x)
    cdef long ell = <long>ceil(val)
    cdef double image, prev
    cdef int it
    if ell < 1:
        ell = 1
    for it in range(2):
        image = _parabolic_image(x, ell, prm)
        if ell == 1:
            prev = x
        else:
            prev = _parabolic_image(x, ell - 1, prm)
        if image <= al and prev > al:
            ell_out[0] = ell
            img[0] = image
            return 0
        if image > al:
            ell += 1
        else:
            ell -= 1
        if ell < 1:
            break
    return 2


cdef Step _v(double x, const double* prm, const double* rtab, int nr,
             const double* disc, int nd) noexcept nogil:
    cdef Step s
    cdef double mu = prm[P_MU], al = prm[P_ALPHA], tol = prm[P_TOL]
    cdef double h = mu / 2.0, e, image
    cdef long ell
    s.status = 0
    if _outside(x, -mu / 2, mu / 2, tol):
        s.status = 5
        return s
    if fabs(x - h) <= tol or fabs(x + h) <= tol:
        s.status = 3
        return s
    if fabs(x - al) <= tol or fabs(x + al) <= tol:
        s.status = 2
        return s
    if x > al:
        s.status = _accelerate(x, prm, &ell, &image)
        if s.status != 0:
            return s
        e = ell * prm[P_PARC]
        s.a = 1.0 + e * h; s.b = -e * h * h; s.c = e; s.d = 1.0 - e * h
        s.image = image
        _finish(&s, x)
        return s
    if x < -al:
        s.status = _accelerate(-x, prm, &ell, &image)
        if s.status != 0:
            return s
        e = ell * prm[P_PARC]
        s.a = 1.0 + e * h; s.b = e * h * h; s.c = -e; s.d = 1.0 - e * h
        s.image = -image
        _finish(&s, x)
        return s
    return _additive(x, prm, rtab, nr, disc, nd)


cdef Step _dispatch(int code, double x, const double* prm, const double* rtab, int nr,
                    const double* disc, int nd) noexcept nogil:
    if code == 0:
        return _h(x, prm)
    if code == 1:
        return _k(x, prm)
    if code == 2:
        return _r(x, prm)
    if code == 3:
        return _a(x, prm, rtab, nr, disc, nd)
    return _v(x, prm, rtab, nr, disc, nd)


def step_many(int code, double[::1] prm, double[:, ::1] rtab, double[::1] disc, double[::1] xs):
    """Branch matrix (N, 4), image, tau and status for every x."""
    cdef Py_ssize_t n = xs.shape[0], i
    mats = np.zeros((n, 4))
    out = np.full(n, np.nan)
    taus = np.full(n, np.nan)
    status = np.zeros(n, dtype=np.int8)
    cdef double[:, ::1] mv = mats
    cdef double[::1] ov = out, tv = taus
    cdef signed char[::1] sv = status
    cdef int nr = rtab.shape[0], nd = disc.shape[0]
    cdef Step s
    with nogil:
        for i in range(n):
            s = _dispatch(code, xs[i], &prm[0], &rtab[0, 0], nr, &disc[0], nd)
            sv[i] = s.status
            if s.status == 0:
                mv[i, 0] = s.a; mv[i, 1] = s.b; mv[i, 2] = s.c; mv[i, 3] = s.d
                ov[i] = s.image
                tv[i] = s.tau
    return mats, out, taus, status


def birkhoff(int code, double[::1] prm, double[:, ::1] rtab, double[::1] disc,
             double x0, long n, int nbatch, long start=0):
    """Per-batch sums of tau for global steps start..n-1 of the orbit of x0.

    Stops at the first bad step; ``done`` counts the steps taken in this call.
    """
    sums = np.zeros(nbatch)
    counts = np.zeros(nbatch, dtype=np.int64)
    cdef double[::1] sv = sums
    cdef long long[::1] cv = counts
    cdef long bsize = n // nbatch if n >= nbatch else 1
    cdef long i, b, done = 0
    cdef int nr = rtab.shape[0], nd = disc.shape[0], status = 0
    cdef double x = x0
    cdef Step s
    with nogil:
        for i in range(start, n):
            s = _dispatch(code, x, &prm[0], &rtab[0, 0], nr, &disc[0], nd)
            if s.status != 0:
                status = s.status
                break
            b = i // bsize
            if b >= nbatch:
                b = nbatch - 1
            sv[b] += s.tau
            cv[b] += 1
            x = s.image
            done += 1
    return sums, counts, done, status, x


def planar_orbit(int code, double[::1] prm, double[:, ::1] rtab, double[::1] disc,
                 double x0, double y0, long n):
    """Start point and up to n planar images; returns (xs, ys, status)."""
    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    cdef double[::1] xv = xs, yv = ys
    cdef int nr = rtab.shape[0], nd = disc.shape[0], status = 0
    cdef double x = x0, y = y0, w
    cdef long i, m = 0
    cdef Step s
    xv[0] = x; yv[0] = y
    with nogil:
        for i in range(n):
            s = _dispatch(code, x, &prm[0], &rtab[0, 0], nr, &disc[0], nd)
            if s.status != 0:
                status = s.status
                break
            w = s.c * x + s.d
            if fabs(w) <= 1e-12:
                status = 1
                break
            x, y = (s.a * x + s.b) / w, w * w * y - s.c * w
            if not (isfinite(x) and isfinite(y)):
                status = 1
                break
            m += 1
            xv[m] = x; yv[m] = y
    return xs[:m + 1], ys[:m + 1], status
