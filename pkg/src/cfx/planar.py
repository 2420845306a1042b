"""The planar natural-extension map T_M and its bookkeeping.

T_M(x, y) = (M.x, (cx+d)^2 y - c(cx+d)) preserves Lebesgue measure and sends
the hyperbola y = 1/(x - delta) to y = 1/(x - M.delta), so in the coordinates
(x, delta) it is just the diagonal Moebius action.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import CfxError, ParameterError, PoleError
from .maps import get_step
from .moebius import INF, ExtendedReal, GroupContext, MoebiusMap, act


class PlanarPoint(NamedTuple):
    x: float
    y: float


def planar_apply(M: MoebiusMap, p, tol: float = 1e-12) -> PlanarPoint:
    if M.orientation < 0:
        raise ParameterError("planar extension is only defined for determinant +1 maps")
    x, y = p
    w = M.c * x + M.d
    if abs(w) <= tol:
        raise PoleError(f"T_M pole at x = {x!r}")
    return PlanarPoint((M.a * x + M.b) / w, w * w * y - M.c * w)


def planar_apply_many(mats: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    """Vectorised T_M with one matrix (a, b, c, d) per row of ``mats``."""
    a, b, c, d = mats[:, 0], mats[:, 1], mats[:, 2], mats[:, 3]
    w = c * xs + d
    with np.errstate(divide="ignore", invalid="ignore"):
        return (a * xs + b) / w, w * w * ys - c * w


def transport_delta(M: MoebiusMap, delta: ExtendedReal) -> ExtendedReal:
    """Pole of the image curve: y = 1/(x - delta) goes to y = 1/(x - M.delta)."""
    return act(M, delta)


def delta_of(p) -> ExtendedReal:
    """Pole of the hyperbola y = 1/(x - delta) through p (INF when y = 0)."""
    x, y = p
    if y == 0.0:
        return INF
    return x - 1.0 / y


def to_transversal(p) -> MoebiusMap:
    """Matrix (x, xy-1; 1, y) of the transversal; determinant 1 by construction."""
    x, y = p
    return MoebiusMap(x, x * y - 1.0, 1.0, y)


def from_transversal(A: MoebiusMap) -> PlanarPoint:
    """Inverse of :func:`to_transversal` after scaling the bottom-left entry to 1."""
    if abs(A.c) < 1e-15:
        raise ParameterError("matrix is not on the transversal (c = 0)")
    return PlanarPoint(A.a / A.c, A.d / A.c)


def geodesic_flow(t: float) -> np.ndarray:
    return np.diag([math.exp(t / 2.0), math.exp(-t / 2.0)])


@dataclass
class PlanarOrbit:
    points: list[PlanarPoint]
    termination: Optional[str] = None

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=float).reshape(-1, 2)


def planar_step(ctx: GroupContext, map_id: str, p) -> PlanarPoint:
    """One step of T_f: the interval map chooses the branch at p.x."""
    s = get_step(map_id)(ctx, float(p[0]))
    return planar_apply(s.matrix, p)


def planar_orbit(ctx: GroupContext, map_id: str, p0, n: int) -> PlanarOrbit:
    """The start point followed by up to n images; errors end the orbit."""
    if map_id == "f":
        raise ParameterError("the original Rosen map has no planar extension here")
    step = get_step(map_id)
    p = PlanarPoint(float(p0[0]), float(p0[1]))
    pts = [p]
    cause = None
    for _ in range(int(n)):
        try:
            p = planar_apply(step(ctx, p.x).matrix, p)
        except CfxError as exc:
            cause = f"{type(exc).__name__}: {exc}"
            break
        if not (math.isfinite(p.x) and math.isfinite(p.y)):
            cause = "PoleError: non-finite planar image"
            break
        pts.append(p)
    return PlanarOrbit(pts, cause)
