"""The interval maps: original and symmetric Rosen, the conjugated Rosen map k,
its square r, and the additive and multiplicative Veech maps.

Each ``*_step`` function applies one step and returns a :class:`StepResult`
carrying the image, the branch matrix, the digit and the return time.  These
are the reference scalar implementations; the batch kernels in
:mod:`cfx.kernels` reproduce them for speed.

Map ids used throughout the package::

    f  original Rosen map (determinant -1 branches for x > 0)
    h  symmetric Rosen map on J = [-lambda/2, lambda/2)
    k  conjugated Rosen map on I = [-mu/2, mu/2)
    r  k composed with itself
    a  additive Veech map on I
    v  multiplicative Veech map on I
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .errors import (
    CfxError,
    DiscontinuityPoint,
    FixedPoint,
    ParameterError,
    Unbounded,
    ZeroOrbit,
)
from .moebius import INF, GroupContext, MoebiusMap, act, tau


# -- digits -----------------------------------------------------------------

@dataclass(frozen=True)
class RosenOriginal:
    eps: int
    b: int

    def __str__(self):
        return f"{'+' if self.eps > 0 else '-'}{self.b}"


@dataclass(frozen=True)
class RosenSym:
    a: int

    def __str__(self):
        return str(self.a)


@dataclass(frozen=True)
class Conj:
    """side=+1: x > 0, branch P^p U^-1; side=-1: x < 0, branch P^p U."""

    side: int
    p: int

    def __str__(self):
        return f"{'+' if self.side > 0 else '-'}:{self.p}"


@dataclass(frozen=True)
class Doubled:
    first: Conj
    second: Conj

    def __str__(self):
        return f"{self.first}|{self.second}"


@dataclass(frozen=True)
class VeechAdd:
    k: int
    j: int

    def __str__(self):
        return f"{self.k}:{self.j}"


class Regime(enum.Enum):
    LEFT = "L"
    CENTRAL = "C"
    RIGHT = "R"


@dataclass(frozen=True)
class VeechMult:
    regime: Regime
    ell: Optional[int] = None
    k: Optional[int] = None
    j: Optional[int] = None

    def __str__(self):
        if self.regime is Regime.CENTRAL:
            return f"C{self.k}:{self.j}"
        return f"{self.regime.value}{self.ell}"


Digit = Union[RosenOriginal, RosenSym, Conj, Doubled, VeechAdd, VeechMult]


@dataclass(frozen=True)
class StepResult:
    x: float
    image: float
    matrix: MoebiusMap
    digit: Digit
    tau: float


# -- helpers ----------------------------------------------------------------

def _reduce(y: float, period: float) -> tuple[int, float]:
    """Integer p with y + p*period in [-period/2, period/2), nudged once."""
    half = period / 2.0
    p = -math.floor(y / period + 0.5)
    z = y + p * period
    if z < -half:
        p += 1
        z = y + p * period
    elif z >= half:
        p -= 1
        z = y + p * period
    return p, z


def _check_in(x: float, lo: float, hi: float, tol: float) -> None:
    if not (lo - tol <= x <= hi + tol) or not math.isfinite(x):
        raise ParameterError(f"x = {x!r} outside [{lo:.6g}, {hi:.6g}]")


def _step(x: float, M: MoebiusMap, digit: Digit, image: float) -> StepResult:
    return StepResult(x=x, image=image, matrix=M, digit=digit, tau=tau(M, x, 0.0))


# -- Rosen ------------------------------------------------------------------

def rosen_original_step(ctx: GroupContext, x: float) -> StepResult:
    """x -> 1/|x| - b*lambda with b = floor(1/(|x| lambda) + 1/2)."""
    lam = ctx.lam
    _check_in(x, -lam / 2, lam / 2, ctx.tol)
    if abs(x) <= ctx.tol:
        raise ZeroOrbit(f"original Rosen step undefined at x = {x!r}")
    eps = 1 if x > 0 else -1
    p, image = _reduce(1.0 / abs(x), lam)
    b = -p
    if eps > 0:
        M = MoebiusMap(-b * lam, 1.0, 1.0, 0.0)  # determinant -1
    else:
        M = MoebiusMap(-b * lam, -1.0, 1.0, 0.0)
    return _step(x, M, RosenOriginal(eps, b), image)


def rosen_sym_step(ctx: GroupContext, x: float) -> StepResult:
    """h(x) = -1/x - a*lambda with a = floor(-1/(x lambda) + 1/2); branch S^-a T."""
    lam = ctx.lam
    _check_in(x, -lam / 2, lam / 2, ctx.tol)
    if abs(x) <= ctx.tol:
        raise ZeroOrbit(f"symmetric Rosen step undefined at x = {x!r}")
    p, image = _reduce(-1.0 / x, lam)
    a = -p
    M = MoebiusMap(-a * lam, -1.0, 1.0, 0.0)
    return _step(x, M, RosenSym(a), image)


def conj_rosen_step(ctx: GroupContext, x: float) -> StepResult:
    """k: rotate by U^-sign(x), then translate back into I by a power of P."""
    mu = ctx.mu
    _check_in(x, -mu / 2, mu / 2, ctx.tol)
    if abs(x) <= ctx.tol:
        raise ZeroOrbit(f"conjugated Rosen step undefined at x = {x!r}")
    side = 1 if x > 0 else -1
    B = ctx.U_pow(-side)
    y = act(B, x)
    if y is INF or abs(B.c * x + B.d) <= ctx.tol:
        raise Unbounded(f"U^{-side} sends x = {x!r} to infinity")
    p, image = _reduce(y, mu)
    M = ctx.P_pow(p) @ B
    return _step(x, M, Conj(side, p), image)


def doubled_rosen_step(ctx: GroupContext, x: float) -> StepResult:
    """r = k o k; matrix is the product and tau adds by the cocycle."""
    s1 = conj_rosen_step(ctx, x)
    s2 = conj_rosen_step(ctx, s1.image)
    M = s2.matrix @ s1.matrix
    return StepResult(x=x, image=s2.image, matrix=M,
                      digit=Doubled(s1.digit, s2.digit), tau=s1.tau + s2.tau)


# -- Veech ------------------------------------------------------------------

def _veech_discontinuity(ctx: GroupContext, x: float) -> None:
    tol = ctx.tol
    for dj in ctx.d:
        if abs(x - dj) <= tol:
            raise DiscontinuityPoint(f"x = {x!r} is at d_j = {dj!r}")
    for cj in ctx.c:
        if abs(x - cj) <= tol:
            raise DiscontinuityPoint(f"x = {x!r} is at c_j = {cj!r}")


def _additive(ctx: GroupContext, x: float) -> tuple[MoebiusMap, int, int, float]:
    _veech_discontinuity(ctx, x)
    mu = ctx.mu
    half = mu / 2.0
    for j in range(1, ctx.n):
        Rj = ctx.R_pow(j)
        den = Rj.c * x + Rj.d
        if abs(den) <= ctx.tol:
            raise Unbounded(f"R^{j} sends x = {x!r} to infinity")
        y = (Rj.a * x + Rj.b) / den
        if abs(y) > half:
            k, image = _reduce(y, mu)
            return ctx.P_pow(k) @ Rj, k, j, image
    raise DiscontinuityPoint(f"no rotation exponent leaves I for x = {x!r}")


def veech_additive_step(ctx: GroupContext, x: float) -> StepResult:
    """a(x) = P^k R^j . x, with j the rotation leaving I and k returning to I."""
    mu = ctx.mu
    _check_in(x, -mu / 2, mu / 2, ctx.tol)
    M, k, j, image = _additive(ctx, x)
    return _step(x, M, VeechAdd(k, j), image)


def mult_exponent(ctx: GroupContext, x: float) -> int:
    """Closed-form acceleration exponent for x in (alpha, mu/2)."""
    mu, al = ctx.mu, ctx.alpha
    val = (mu * mu + 4.0) / mu / (mu - 2.0 * al) * (x - al) / (mu - 2.0 * x)
    return max(1, math.ceil(val))


def _parabolic_image(ctx: GroupContext, x: float, ell: int) -> float:
    """(P R^-1)**ell . x computed as 1/(y - mu/2) = 1/(x - mu/2) + ell*c.

    Same value as acting by the closed-form matrix, but without the
    cancellation that matrix suffers for large ell near the fixed point.
    """
    h = ctx.mu / 2.0
    u = 1.0 / (x - h) + ell * ctx.parabolic_c
    return h + 1.0 / u


def _accelerate(ctx: GroupContext, x: float) -> tuple[int, float]:
    """Exponent and image for the right regime, with the exit postcondition checked."""
    al = ctx.alpha
    ell = mult_exponent(ctx, x)
    for _ in range(2):
        image = _parabolic_image(ctx, x, ell)
        prev = x if ell == 1 else _parabolic_image(ctx, x, ell - 1)
        if image <= al and prev > al:
            return ell, image
        ell = ell + 1 if image > al else ell - 1
        if ell < 1:
            break
    raise DiscontinuityPoint(f"acceleration exponent ambiguous at x = {x!r}")


def veech_mult_step(ctx: GroupContext, x: float) -> StepResult:
    """v: the additive map accelerated on the two parabolic cylinders."""
    mu, al, tol = ctx.mu, ctx.alpha, ctx.tol
    _check_in(x, -mu / 2, mu / 2, tol)
    if abs(x - mu / 2) <= tol or abs(x + mu / 2) <= tol:
        raise FixedPoint(f"x = {x!r} is a parabolic fixed point")
    if abs(x - al) <= tol or abs(x + al) <= tol:
        raise DiscontinuityPoint(f"x = {x!r} is at +-alpha")
    if x > al:
        ell, image = _accelerate(ctx, x)
        return _step(x, ctx.PRinv_pow(ell), VeechMult(Regime.RIGHT, ell=ell), image)
    if x < -al:
        ell, neg = _accelerate(ctx, -x)
        return _step(x, ctx.PinvR_pow(ell), VeechMult(Regime.LEFT, ell=ell), -neg)
    M, k, j, image = _additive(ctx, x)
    return _step(x, M, VeechMult(Regime.CENTRAL, k=k, j=j), image)


# -- registry and orbits ----------------------------------------------------

STEPS: dict[str, Callable[[GroupContext, float], StepResult]] = {
    "f": rosen_original_step,
    "h": rosen_sym_step,
    "k": conj_rosen_step,
    "r": doubled_rosen_step,
    "a": veech_additive_step,
    "v": veech_mult_step,
}


def get_step(map_id: str) -> Callable[[GroupContext, float], StepResult]:
    try:
        return STEPS[map_id]
    except KeyError:
        raise ParameterError(f"unknown map id {map_id!r}; expected one of {sorted(STEPS)}")


def map_interval(ctx: GroupContext, map_id: str) -> tuple[float, float]:
    get_step(map_id)
    return ctx.J if map_id in ("f", "h") else ctx.I


@dataclass
class Orbit:
    """Steps of an interval-map orbit and why it stopped (None if it ran out)."""

    map_id: str
    start: float
    steps: list[StepResult] = field(default_factory=list)
    termination: Optional[str] = None

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    @property
    def points(self) -> list[float]:
        pts = [self.start] + [s.image for s in self.steps]
        return pts

    @property
    def digits(self) -> list[Digit]:
        return [s.digit for s in self.steps]


def orbit(ctx: GroupContext, map_id: str, x0: float, n: int) -> Orbit:
    """Up to n steps from x0; step errors end the orbit and are recorded."""
    step = get_step(map_id)
    out = Orbit(map_id, float(x0))
    x = float(x0)
    for _ in range(int(n)):
        try:
            s = step(ctx, x)
        except CfxError as exc:
            out.termination = f"{type(exc).__name__}: {exc}"
            break
        out.steps.append(s)
        x = s.image
    return out
