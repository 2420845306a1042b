"""Batch kernels with backend selection.

The compiled extension ``cfx._ckernels`` is used when it imports; otherwise,
or when the environment variable ``CFX_PURE_PYTHON`` is set to a non-empty
value other than ``0``, the pure-Python fallback is used.  Both backends
return identical structures::

    step_many(ctx, map_id, xs)            -> mats (N, 4), images, taus, status
    birkhoff(ctx, map_id, x0, n, nbatch, start) -> batch sums, batch counts, steps, status, last x
    planar_orbit(ctx, map_id, x0, y0, n)  -> xs, ys, status

Status codes are listed in :data:`STATUS_NAMES`.
"""
from __future__ import annotations

import os
from functools import lru_cache

import numpy as np

from . import _pykernels
from .errors import ParameterError
from .moebius import GroupContext

STATUS_NAMES = {
    0: "ok",
    1: "zero/pole",
    2: "discontinuity",
    3: "fixed point",
    4: "unbounded",
    5: "outside interval",
}

MAP_CODES = {"h": 0, "k": 1, "r": 2, "a": 3, "v": 4}

try:
    if os.environ.get("CFX_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure Python requested")
    from . import _ckernels
except ImportError:
    _ckernels = None

BACKEND = "cython" if _ckernels is not None else "python"


def _code(map_id: str) -> int:
    try:
        return MAP_CODES[map_id]
    except KeyError:
        raise ParameterError(f"no batch kernel for map {map_id!r}; expected one of {sorted(MAP_CODES)}")


@lru_cache(maxsize=64)
def build_params(ctx: GroupContext):
    """Pack the constants a compiled step needs: (params, R-power table, cut points)."""
    U, Ui = ctx.U_pow(1), ctx.U_pow(-1)
    prm = np.array([ctx.lam, ctx.mu, ctx.alpha, ctx.tol, ctx.parabolic_c,
                    U.a, U.b, U.c, U.d, Ui.a, Ui.b, Ui.c, Ui.d])
    rtab = np.array([[M.a, M.b, M.c, M.d] for M in (ctx.R_pow(j) for j in range(1, ctx.n))])
    disc = np.array(list(ctx.d) + list(ctx.c), dtype=float)
    return prm, np.ascontiguousarray(rtab), disc


def _use_c(backend):
    b = backend or BACKEND
    if b == "cython":
        if _ckernels is None:
            raise ParameterError("compiled kernels are not available")
        return True
    if b != "python":
        raise ParameterError(f"unknown backend {backend!r}")
    return False


def step_many(ctx: GroupContext, map_id: str, xs, backend=None):
    xs = np.ascontiguousarray(xs, dtype=float)
    code = _code(map_id)
    if _use_c(backend):
        return _ckernels.step_many(code, *build_params(ctx), xs)
    return _pykernels.step_many(ctx, map_id, xs)


def birkhoff(ctx: GroupContext, map_id: str, x0: float, n: int, nbatch: int = 100, start: int = 0,
             backend=None):
    code = _code(map_id)
    if _use_c(backend):
        return _ckernels.birkhoff(code, *build_params(ctx), float(x0), int(n), int(nbatch), int(start))
    return _pykernels.birkhoff(ctx, map_id, x0, int(n), int(nbatch), int(start))


def planar_orbit(ctx: GroupContext, map_id: str, x0: float, y0: float, n: int, backend=None):
    code = _code(map_id)
    if _use_c(backend):
        return _ckernels.planar_orbit(code, *build_params(ctx), float(x0), float(y0), int(n))
    return _pykernels.planar_orbit(ctx, map_id, x0, y0, int(n))
