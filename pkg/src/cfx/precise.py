"""Extended-precision r and v steps (mpmath) for ill-conditioned orbits.

A first return to the intersection domain can pass through a branch whose
derivative is of order 1e12, so a double-precision orbit may lose most of
its digits.  These steps repeat the branch logic of :mod:`cfx.maps` at a
working precision of ``dps`` digits.
"""
from __future__ import annotations

from functools import lru_cache

import mpmath as mp

from .errors import DiscontinuityPoint, PoleError

DPS = 60


class PreciseContext:
    """mpmath versions of the constants the r and v steps need."""

    def __init__(self, q: int, dps: int = DPS):
        self.q, self.n, self.dps = q, q // 2, dps
        with mp.workdps(dps):
            self.theta = mp.pi / q
            self.mu = 2 * mp.cot(self.theta)
            m2 = self.mu ** 2
            self.alpha = (self.mu / 2) * (3 * m2 - 4) / (5 * m2 + 4)
            self.parc = 4 * self.mu / (m2 + 4)
            self.U = {s: _rot(s * self.theta) for s in (-1, 1)}
            self.R = [_rot(2 * j * self.theta) for j in range(self.n)]


@lru_cache(maxsize=16)
def precise_context(q: int, dps: int = DPS) -> PreciseContext:
    return PreciseContext(q, dps)


def _rot(a):
    c, s = mp.cos(a), mp.sin(a)
    return (c, -s, s, c)


def _act(M, x):
    a, b, c, d = M
    den = c * x + d
    if den == 0:
        raise PoleError("matrix sends x to infinity")
    return (a * x + b) / den


def _mul(M, N):
    a, b, c, d = M
    e, f, g, h = N
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def _reduce(y, period):
    p = -mp.floor(y / period + mp.mpf(1) / 2)
    return (1, p * period, 0, 1), y + p * period


def k_step(pc: PreciseContext, x):
    if x == 0:
        raise PoleError("k undefined at 0")
    B = pc.U[-1 if x > 0 else 1]
    T, image = _reduce(_act(B, x), pc.mu)
    return _mul(T, B), image


def r_step(pc: PreciseContext, x):
    M1, x1 = k_step(pc, x)
    M2, x2 = k_step(pc, x1)
    return _mul(M2, M1), x2


def v_step(pc: PreciseContext, x):
    h, al = pc.mu / 2, pc.alpha
    if abs(x) >= h:
        raise DiscontinuityPoint("x at a parabolic fixed point")
    if abs(x) > al:
        s = 1 if x > 0 else -1
        u = 1 / (s * x - h)

        def image(ell):
            return h + 1 / (u + ell * pc.parc)

        ell = int(mp.ceil((pc.mu ** 2 + 4) / pc.mu / (pc.mu - 2 * al) * (s * x - al) / (pc.mu - 2 * s * x)))
        ell = max(ell, 1)
        while image(ell) > al:
            ell += 1
        while ell > 1 and image(ell - 1) <= al:
            ell -= 1
        e = ell * pc.parc
        return (1 + e * h, -s * e * h * h, s * e, 1 - e * h), s * image(ell)
    for j in range(1, pc.n):
        y = _act(pc.R[j], x)
        if abs(y) > h:
            T, image = _reduce(y, pc.mu)
            return _mul(T, pc.R[j]), image
    raise DiscontinuityPoint("no rotation exponent leaves I")


STEPS = {"r": r_step, "v": v_step}


def planar_step(pc: PreciseContext, map_id: str, p):
    """T(x, y) in delta form at extended precision; p is a pair of mpf."""
    x, y = p
    M, X = STEPS[map_id](pc, x)
    if y == 0:
        D = M[0] / M[2]
    else:
        D = _act(M, x - 1 / y)
    return X, 1 / (X - D)


def first_return(q: int, map_id: str, p, inside, max_iters: int, dps: int = DPS):
    """(point as floats, count) of the first iterate with inside(point) true.

    ``inside`` receives a float pair.  Returns None if no return happens
    within max_iters iterations.
    """
    pc = precise_context(q, dps)
    with mp.workdps(dps):
        z = (mp.mpf(p[0]), mp.mpf(p[1]))
        for i in range(1, int(max_iters) + 1):
            z = planar_step(pc, map_id, z)
            zf = (float(z[0]), float(z[1]))
            if inside(zf):
                return zf, i
    return None
