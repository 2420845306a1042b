"""Pure-Python fallback for the compiled kernels, built on the scalar steps.

Same signatures and outputs as :mod:`cfx._ckernels`, except that the first
arguments are the context and map id instead of packed parameter arrays.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import (
    CfxError,
    DiscontinuityPoint,
    FixedPoint,
    ParameterError,
    PoleError,
    Unbounded,
)
from .maps import get_step

OK, POLE, DISCONTINUITY, FIXED, UNBOUNDED, OUTSIDE = range(6)


def status_of(exc: CfxError) -> int:
    if isinstance(exc, Unbounded):
        return UNBOUNDED
    if isinstance(exc, PoleError):
        return POLE
    if isinstance(exc, FixedPoint):
        return FIXED
    if isinstance(exc, DiscontinuityPoint):
        return DISCONTINUITY
    if isinstance(exc, ParameterError):
        return OUTSIDE
    return POLE


def step_many(ctx, map_id, xs):
    step = get_step(map_id)
    n = len(xs)
    mats = np.zeros((n, 4))
    out = np.full(n, np.nan)
    taus = np.full(n, np.nan)
    status = np.zeros(n, dtype=np.int8)
    for i, x in enumerate(xs):
        try:
            s = step(ctx, float(x))
        except CfxError as exc:
            status[i] = status_of(exc)
            continue
        M = s.matrix
        mats[i] = (M.a, M.b, M.c, M.d)
        out[i] = s.image
        taus[i] = s.tau
    return mats, out, taus, status


def birkhoff(ctx, map_id, x0, n, nbatch, start=0):
    step = get_step(map_id)
    sums = np.zeros(nbatch)
    counts = np.zeros(nbatch, dtype=np.int64)
    bsize = n // nbatch if n >= nbatch else 1
    x = float(x0)
    done = 0
    status = OK
    for i in range(int(start), int(n)):
        try:
            s = step(ctx, x)
        except CfxError as exc:
            status = status_of(exc)
            break
        b = min(i // bsize, nbatch - 1)
        sums[b] += s.tau
        counts[b] += 1
        x = s.image
        done += 1
    return sums, counts, done, status, x


def planar_orbit(ctx, map_id, x0, y0, n):
    step = get_step(map_id)
    xs = [float(x0)]
    ys = [float(y0)]
    x, y = xs[0], ys[0]
    status = OK
    for _ in range(int(n)):
        try:
            M = step(ctx, x).matrix
        except CfxError as exc:
            status = status_of(exc)
            break
        w = M.c * x + M.d
        if abs(w) <= 1e-12:
            status = POLE
            break
        x, y = (M.a * x + M.b) / w, w * w * y - M.c * w
        if not (math.isfinite(x) and math.isfinite(y)):
            status = POLE
            break
        xs.append(x)
        ys.append(y)
    return np.array(xs), np.array(ys), status
