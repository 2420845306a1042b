"""Projective 2x2 matrix algebra, the Moebius action and the q-dependent group data.

Everything downstream works with :class:`MoebiusMap` values and a single
:class:`GroupContext` built once per q by :func:`make_context`.  The extended
real line is modelled by ordinary floats plus the singleton :data:`INF`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ParameterError, PoleError

#: |c| below this counts as zero when choosing the canonical sign.
CANON_TOL = 1e-12
#: relative size of cx+d below which the action returns INF.
INF_TOL = 1e-14
#: default comparison tolerance.
DEFAULT_TOL = 1e-9


class Infinity:
    """The point at infinity of the projective real line (unsigned)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __neg__(self):
        return self

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()

ExtendedReal = Union[float, Infinity]


def is_inf(x) -> bool:
    return x is INF


@dataclass(frozen=True)
class MoebiusMap:
    """Real 2x2 matrix taken up to sign, normalised to |det| = 1.

    The stored entries are the canonical representative: c > 0, or c ~ 0
    and d > 0.  ``orientation`` is -1 for determinant -1 maps, which only
    occur as digit bookkeeping for the original Rosen map.
    """

    a: float
    b: float
    c: float
    d: float
    orientation: int = field(default=1, compare=False)

    def __post_init__(self):
        a, b, c, d = (float(v) for v in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if det == 0.0 or not math.isfinite(det):
            raise ParameterError(f"singular matrix ({a}, {b}; {c}, {d})")
        s = math.sqrt(abs(det))
        a, b, c, d = a / s, b / s, c / s, d / s
        if not (c > CANON_TOL or (abs(c) <= CANON_TOL and d > 0)):
            a, b, c, d = -a, -b, -c, -d
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "orientation", 1 if det > 0 else -1)

    @classmethod
    def from_array(cls, m) -> "MoebiusMap":
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return MoebiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "MoebiusMap":
        if self.orientation < 0:
            return MoebiusMap(-self.d, self.b, self.c, -self.a)
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def __pow__(self, k: int) -> "MoebiusMap":
        k = int(k)
        base = self if k >= 0 else self.inverse()
        k = abs(k)
        out = IDENTITY
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def __call__(self, x: ExtendedReal) -> ExtendedReal:
        return act(self, x)

    def trace(self) -> float:
        return self.a + self.d

    def __repr__(self):
        return f"MoebiusMap({self.a:.12g}, {self.b:.12g}; {self.c:.12g}, {self.d:.12g})"


IDENTITY = MoebiusMap(1.0, 0.0, 0.0, 1.0)


def translation(t: float) -> MoebiusMap:
    return MoebiusMap(1.0, t, 0.0, 1.0)


def rotation(angle: float) -> MoebiusMap:
    """Counter-clockwise rotation matrix; acts on R by x -> (cx - s)/(sx + c)."""
    c, s = math.cos(angle), math.sin(angle)
    return MoebiusMap(c, -s, s, c)


def act(M: MoebiusMap, x: ExtendedReal) -> ExtendedReal:
    """Moebius action ``(ax + b)/(cx + d)`` on the extended real line."""
    if x is INF:
        if abs(M.c) <= INF_TOL:
            return INF
        return M.a / M.c
    num = M.a * x + M.b
    den = M.c * x + M.d
    if abs(den) <= INF_TOL * max(1.0, abs(num)):
        return INF
    return num / den


def tau(M: MoebiusMap, x: float, tol: float = 1e-12) -> float:
    """Return time ``-2 log|cx + d|``; independent of the sign representative."""
    den = M.c * x + M.d
    if abs(den) <= tol:
        raise PoleError(f"tau: |cx+d| = {abs(den):.3g} at x = {x!r}")
    return -2.0 * math.log(abs(den))


def projective_distance(M: MoebiusMap, N: MoebiusMap) -> float:
    """Entrywise sup distance between M and the nearer of +-N."""
    m = M.as_array()
    n = N.as_array()
    return float(min(np.abs(m - n).max(), np.abs(m + n).max()))


def projective_equal(M: MoebiusMap, N: MoebiusMap, tol: float = DEFAULT_TOL) -> bool:
    return projective_distance(M, N) <= tol


def ext_close(x: ExtendedReal, y: ExtendedReal, tol: float = DEFAULT_TOL) -> bool:
    """Closeness on the extended line (INF only matches INF or huge values)."""
    if x is INF or y is INF:
        other = y if x is INF else x
        return other is INF or abs(other) > 1.0 / tol
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


@dataclass(frozen=True, eq=False)
class GroupContext:
    """Constants, generators and distinguished orbits for one even q >= 6."""

    q: int
    n: int
    theta: float
    lam: float
    mu: float
    alpha: float
    gamma: float
    Q1: float
    rho: float
    S: MoebiusMap
    T: MoebiusMap
    U: MoebiusMap
    R: MoebiusMap
    P: MoebiusMap
    Q: MoebiusMap
    phi: tuple
    delta: tuple
    d: tuple
    c: tuple
    J: tuple
    I: tuple
    tol: float = DEFAULT_TOL

    def R_pow(self, j: int) -> MoebiusMap:
        """R**j built directly from trig to avoid accumulated rounding."""
        return rotation(2.0 * j * self.theta)

    def U_pow(self, j: int) -> MoebiusMap:
        return rotation(j * self.theta)

    def P_pow(self, k: int) -> MoebiusMap:
        return translation(k * self.mu)

    def S_pow(self, k: int) -> MoebiusMap:
        return translation(k * self.lam)

    @property
    def parabolic_c(self) -> float:
        """Lower-left entry of the conjugate of PR^-1 fixing 0: 4mu/(mu^2+4)."""
        return 4.0 * self.mu / (self.mu**2 + 4.0)

    def PRinv_pow(self, ell: int) -> MoebiusMap:
        """(P R^-1)**ell in closed form, via conjugation to a lower parabolic."""
        h = self.mu / 2.0
        e = ell * self.parabolic_c
        return MoebiusMap(1.0 + e * h, -e * h * h, e, 1.0 - e * h)

    def PinvR_pow(self, ell: int) -> MoebiusMap:
        """(P^-1 R)**ell, the mirror image of :meth:`PRinv_pow`."""
        h = self.mu / 2.0
        e = ell * self.parabolic_c
        return MoebiusMap(1.0 + e * h, e * h * h, -e, 1.0 - e * h)

    def table(self) -> list[tuple[str, str]]:
        rows = [
            ("q", str(self.q)),
            ("n", str(self.n)),
            ("lambda", f"{self.lam:.17g}"),
            ("mu", f"{self.mu:.17g}"),
            ("alpha", f"{self.alpha:.17g}"),
            ("gamma", f"{self.gamma:.17g}"),
            ("Q.1", f"{self.Q1:.17g}"),
            ("rho", f"{self.rho:.17g}"),
        ]
        rows += [(f"phi_{j}", f"{v:.17g}") for j, v in enumerate(self.phi)]
        rows += [(f"delta_{j}", f"{v:.17g}") for j, v in enumerate(self.delta)]
        rows += [(f"d_{j + 1}", f"{v:.17g}") for j, v in enumerate(self.d)]
        rows += [(f"c_{j + 1}", f"{v:.17g}") for j, v in enumerate(self.c)]
        return rows


def make_context(q: int, tol: float = DEFAULT_TOL) -> GroupContext:
    """Build every q-dependent constant once and check the relation suite."""
    if isinstance(q, bool) or int(q) != q:
        raise ParameterError(f"q must be an integer, got {q!r}")
    q = int(q)
    if q % 2 or q < 6:
        raise ParameterError(f"q must be an even integer >= 6, got {q}")
    n = q // 2
    th = math.pi / q
    cos_t, sin_t = math.cos(th), math.sin(th)
    lam = 2.0 * cos_t
    mu = 2.0 * cos_t / sin_t
    mu2 = mu * mu
    alpha = (mu / 2.0) * (3.0 * mu2 - 4.0) / (5.0 * mu2 + 4.0)
    gamma = (mu / 2.0) * (5.0 * mu2 + 4.0) / (3.0 * mu2 - 4.0)
    Q1 = (1.0 + cos_t) / sin_t
    rho = 1.0 / (sin_t * (lam + 1.0))

    S = translation(lam)
    T = MoebiusMap(0.0, -1.0, 1.0, 0.0)
    U = rotation(th)
    R = rotation(2.0 * th)
    P = translation(mu)
    Q = MoebiusMap(1.0, cos_t, 0.0, sin_t)

    phi = tuple(-math.cos((j + 1) * th) / math.cos(j * th) for j in range(n))
    deltas = [-lam - 1.0]
    for _ in range(n - 2):
        deltas.append(-lam - 1.0 / deltas[-1])
    d = tuple(act(rotation(-2.0 * j * th), mu / 2.0) for j in range(1, n + 1))
    c = tuple(act(rotation(-2.0 * j * th), INF) for j in range(1, n))

    ctx = GroupContext(
        q=q, n=n, theta=th, lam=lam, mu=mu, alpha=alpha, gamma=gamma, Q1=Q1,
        rho=rho, S=S, T=T, U=U, R=R, P=P, Q=Q, phi=phi, delta=tuple(deltas),
        d=d, c=c, J=(-lam / 2.0, lam / 2.0), I=(-mu / 2.0, mu / 2.0), tol=tol,
    )
    bad = {k: v for k, v in relation_residuals(ctx).items() if not v <= 1e-9}
    if bad:
        raise RuntimeError(f"group relations violated for q={q}: {bad}")
    return ctx


def relation_residuals(ctx: GroupContext) -> dict[str, float]:
    """Residual of every identity the constructions rely on (all should be ~0)."""
    S, T, U, R, P, Q = ctx.S, ctx.T, ctx.U, ctx.R, ctx.P, ctx.Q
    I = IDENTITY
    n, q, th, mu, lam = ctx.n, ctx.q, ctx.theta, ctx.mu, ctx.lam
    Qi = Q.inverse()
    res = {
        "T^2 = Id": projective_distance(T @ T, I),
        "(ST)^q = Id": projective_distance((S @ T) ** q, I),
        "R^n = Id": projective_distance(R**n, I),
        "U^2 = R": projective_distance(U @ U, R),
        "QSQ^-1 = P": projective_distance(Q @ S @ Qi, P),
        "QTSQ^-1 = U": projective_distance(Q @ T @ S @ Qi, U),
        "QTSTQ^-1 = RP^-1": projective_distance(Q @ T @ S @ T @ Qi, R @ P.inverse()),
        "(ST)^n.1 = -1": abs(act((S @ T) ** n, 1.0) + 1.0),
        "R.(-mu/2) = mu/2": abs(act(R, -mu / 2) - mu / 2),
        "R^-1.(mu/2) = -mu/2": abs(act(R.inverse(), mu / 2) + mu / 2),
        "delta_0 = -lambda-1": abs(ctx.delta[0] + lam + 1.0),
        "delta_(n-2) = -1/(lambda-1)": abs(ctx.delta[-1] + 1.0 / (lam - 1.0)),
        "phi_(n-1) = 0": abs(ctx.phi[-1]),
        "mu + 1/Q.1 = Q.1": abs(mu + 1.0 / ctx.Q1 - ctx.Q1),
        "Q.1 = (1+cos)/sin": abs(act(Q, 1.0) - ctx.Q1),
        "alpha*gamma = (mu/2)^2": abs(ctx.alpha * ctx.gamma - (mu / 2) ** 2) / (mu / 2) ** 2,
        "alpha = RP^-1.(-mu/2)": abs(act(R @ P.inverse(), -mu / 2) - ctx.alpha),
        "gamma = PR^-1.(-mu/2)": abs(act(P @ R.inverse(), -mu / 2) - ctx.gamma),
        "gamma = mu - R.(mu/2)": abs(mu - act(R, mu / 2) - ctx.gamma),
        "(PR^-1)^1 closed form": projective_distance(ctx.PRinv_pow(1), P @ R.inverse()),
        "(P^-1R)^1 closed form": projective_distance(ctx.PinvR_pow(1), P.inverse() @ R),
        "d_1 = -mu/2": abs(ctx.d[0] + mu / 2),
        "d_n = mu/2": abs(ctx.d[-1] - mu / 2),
    }
    res["phi_j = (S^-1T)^j.(-lambda/2)"] = max(
        abs(act((S.inverse() @ T) ** j, -lam / 2) - ctx.phi[j]) for j in range(n - 1)
    )
    res["Q.phi_j = tan(j pi/q)"] = max(
        abs(act(Q, ctx.phi[j]) - math.tan(j * th)) for j in range(n)
    )
    res["Q.delta_j = -U^j.(Q.1)"] = max(
        abs(act(Q, dj) + act(ctx.U_pow(j), ctx.Q1)) for j, dj in enumerate(ctx.delta)
    )
    res["P^-1Q.(-delta_j) = U^j.(Q.1)"] = max(
        abs(act(P.inverse() @ Q, -dj) - act(ctx.U_pow(j), ctx.Q1))
        for j, dj in enumerate(ctx.delta)
    )
    seq = []
    for j in range(n - 1):
        seq += [ctx.d[j], ctx.c[j]]
    seq.append(ctx.d[-1])
    res["d_1 < c_1 < ... < d_n"] = 0.0 if all(a < b for a, b in zip(seq, seq[1:])) else 1.0
    if q % 4 == 0:
        res["R^(q/4) = T"] = projective_distance(R ** (q // 4), T)
    return res
