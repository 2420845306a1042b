"""Natural-extension domains bounded by pieces of hyperbolas y = 1/(x - delta).

Five domains are modelled (names as used by the CLI):

    E          symmetric Rosen map h, over J
    omega_a    additive Veech map (infinite area)
    omega_v    multiplicative Veech map
    omega_r    doubled conjugated Rosen map r (same as for k)
    omega_bar  intersection of omega_v and omega_r (q >= 8)

Symmetric domains store their upper arcs only; the lower arcs are the images
under (x, y) -> (-x, -y).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InfiniteArea, NoClosedForm, ParameterError, UnsupportedQ
from .moebius import INF, ExtendedReal, GroupContext, act

DOMAIN_NAMES = ("E", "omega_a", "omega_v", "omega_r", "omega_bar")

_ALIASES = {
    "e": "E", "e_rosen_sym": "E", "rosen": "E",
    "omega_a": "omega_a", "omega_add": "omega_a",
    "omega_v": "omega_v", "omega_veech": "omega_v",
    "omega_r": "omega_r",
    "omega_bar": "omega_bar", "omegabar": "omega_bar",
}

#: the map whose planar extension lives on each domain
DOMAIN_MAP = {"E": "h", "omega_a": "a", "omega_v": "v", "omega_r": "r"}


def canonical_name(which: str) -> str:
    try:
        return _ALIASES[which.lower()]
    except KeyError:
        raise ParameterError(f"unknown domain {which!r}; expected one of {DOMAIN_NAMES}")


class Membership(enum.IntEnum):
    OUTSIDE = 0
    INSIDE = 1
    BOUNDARY = 2


@dataclass(frozen=True)
class HyperbolaArc:
    """y = 1/(x - delta) over [x_lo, x_hi); delta = INF means y = 0."""

    x_lo: float
    x_hi: float
    delta: ExtendedReal

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ParameterError(f"empty arc [{self.x_lo}, {self.x_hi})")
        if self.delta is not INF and self.x_lo < self.delta < self.x_hi:
            raise ParameterError(f"pole {self.delta} inside arc [{self.x_lo}, {self.x_hi})")

    def __call__(self, x):
        if self.delta is INF:
            return np.zeros_like(np.asarray(x, dtype=float))
        with np.errstate(divide="ignore"):
            return 1.0 / (np.asarray(x, dtype=float) - self.delta)

    def mirrored(self) -> "HyperbolaArc":
        d = INF if self.delta is INF else -self.delta
        return HyperbolaArc(-self.x_hi, -self.x_lo, d)


def _mirror(arcs: Sequence[HyperbolaArc]) -> tuple[HyperbolaArc, ...]:
    return tuple(a.mirrored() for a in reversed(arcs))


@dataclass(frozen=True)
class Domain:
    name: str
    x_lo: float
    x_hi: float
    upper: tuple
    lower: tuple
    symmetric: bool = False
    q: Optional[int] = None

    def __post_init__(self):
        for side in (self.upper, self.lower):
            if abs(side[0].x_lo - self.x_lo) > 1e-12 or abs(side[-1].x_hi - self.x_hi) > 1e-12:
                raise ParameterError(f"{self.name}: arcs do not cover the x-interval")
            for a, b in zip(side, side[1:]):
                if abs(a.x_hi - b.x_lo) > 1e-12:
                    raise ParameterError(f"{self.name}: gap between arcs at {a.x_hi}")

    @property
    def breakpoints(self) -> np.ndarray:
        pts = {self.x_lo, self.x_hi}
        for a in self.upper + self.lower:
            pts.update((a.x_lo, a.x_hi))
        return np.array(sorted(pts))

    @staticmethod
    def _eval(arcs, x, idx):
        deltas = np.array([np.inf if a.delta is INF else a.delta for a in arcs])
        d = deltas[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.isinf(d), 0.0, 1.0 / (x - d))

    @staticmethod
    def _index(arcs, x):
        los = np.array([a.x_lo for a in arcs])
        return np.clip(np.searchsorted(los, x, side="right") - 1, 0, len(arcs) - 1)

    def upper_at(self, x):
        x = np.asarray(x, dtype=float)
        return self._eval(self.upper, x, self._index(self.upper, x))

    def lower_at(self, x):
        x = np.asarray(x, dtype=float)
        return self._eval(self.lower, x, self._index(self.lower, x))

    def upper_pole_at(self, x: float) -> ExtendedReal:
        return self.upper[int(self._index(self.upper, float(x)))].delta

    def lower_pole_at(self, x: float) -> ExtendedReal:
        return self.lower[int(self._index(self.lower, float(x)))].delta

    def delta_hole(self, x_lo: float, x_hi: float) -> tuple[float, float]:
        """Open interval of poles that no point above [x_lo, x_hi] can have.

        A point (x, y) inside the domain lies on y = 1/(x - delta) with delta
        outside (upper pole, lower pole) at x; this returns the intersection of
        those intervals over the given x-range.
        """
        ups = [a.delta for a in self.upper if a.x_hi > x_lo and a.x_lo < x_hi]
        los = [a.delta for a in self.lower if a.x_hi > x_lo and a.x_lo < x_hi]
        if any(d is INF for d in ups + los):
            raise ParameterError("delta hole undefined for y = 0 boundary arcs")
        return max(ups), min(los)


def classify(d: Domain, xs, ys, tol: float = 1e-9) -> np.ndarray:
    """Vectorised membership: array of :class:`Membership` codes."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    # near an arc junction use both neighbouring arcs
    u1 = d._eval(d.upper, xs, d._index(d.upper, xs - tol))
    u2 = d._eval(d.upper, xs, d._index(d.upper, xs + tol))
    l1 = d._eval(d.lower, xs, d._index(d.lower, xs - tol))
    l2 = d._eval(d.lower, xs, d._index(d.lower, xs + tol))
    with np.errstate(invalid="ignore"):
        up_in, up_out = np.fmin(u1, u2), np.fmax(u1, u2)
        lo_in, lo_out = np.fmax(l1, l2), np.fmin(l1, l2)
        x_in = (xs > d.x_lo + tol) & (xs < d.x_hi - tol)
        x_near = (xs >= d.x_lo - tol) & (xs <= d.x_hi + tol)
        inside = x_in & (ys > lo_in + tol) & (ys < up_in - tol)
        near = x_near & (ys >= lo_out - tol) & (ys <= up_out + tol)
    out = np.full(xs.shape, Membership.OUTSIDE, dtype=np.int8)
    out[near] = Membership.BOUNDARY
    out[inside] = Membership.INSIDE
    return out


def contains(d: Domain, p, tol: float = 1e-9) -> Membership:
    return Membership(int(classify(d, np.array([p[0]]), np.array([p[1]]), tol)[0]))


# -- construction -----------------------------------------------------------

def _rosen_E(ctx: GroupContext) -> Domain:
    n, phi, delta = ctx.n, list(ctx.phi), ctx.delta
    phi[-1] = 0.0
    upper = [HyperbolaArc(phi[j], phi[j + 1], delta[j]) for j in range(n - 2)]
    upper.append(HyperbolaArc(phi[n - 2], 0.0, delta[n - 2]))
    upper.append(HyperbolaArc(0.0, ctx.lam / 2, -1.0))
    return Domain("E", -ctx.lam / 2, ctx.lam / 2, tuple(upper), _mirror(upper), True, ctx.q)


def _omega_a(ctx: GroupContext) -> Domain:
    h = ctx.mu / 2
    upper = (HyperbolaArc(-h, h, -h),)
    return Domain("omega_a", -h, h, upper, _mirror(upper), True, ctx.q)


def _omega_v(ctx: GroupContext) -> Domain:
    h, al = ctx.mu / 2, ctx.alpha
    upper = (HyperbolaArc(-h, -al, -ctx.gamma), HyperbolaArc(-al, h, -h))
    return Domain("omega_v", -h, h, upper, _mirror(upper), True, ctx.q)


def _omega_r(ctx: GroupContext) -> Domain:
    h, th = ctx.mu / 2, ctx.theta
    ends = [math.tan(j * th) for j in range(ctx.n)]
    ends[-1] = h
    upper = [HyperbolaArc(-h, ends[1], -ctx.Q1)]
    for j in range(1, ctx.n - 1):
        upper.append(HyperbolaArc(ends[j], ends[j + 1], -act(ctx.U_pow(j), ctx.Q1)))
    return Domain("omega_r", -h, h, tuple(upper), _mirror(upper), True, ctx.q)


def _omega_bar(ctx: GroupContext) -> Domain:
    if ctx.q < 8:
        raise UnsupportedQ("the intersection domain is only modelled for q >= 8")
    h = ctx.mu / 2
    upper = (HyperbolaArc(-h, 2 / ctx.mu, -ctx.Q1), HyperbolaArc(2 / ctx.mu, h, -h))
    return Domain("omega_bar", -h, h, upper, _mirror(upper), True, ctx.q)


_BUILDERS = {
    "E": _rosen_E, "omega_a": _omega_a, "omega_v": _omega_v,
    "omega_r": _omega_r, "omega_bar": _omega_bar,
}


def build_domain(ctx: GroupContext, which: str) -> Domain:
    return _BUILDERS[canonical_name(which)](ctx)


# -- areas ------------------------------------------------------------------

def area_closed_form(ctx: GroupContext, which: str) -> float:
    name = canonical_name(which)
    c = math.cos(ctx.theta)
    if name == "omega_v":
        return 2.0 * math.log(8.0 * c * c)
    if name == "omega_r":
        return 2.0 * math.log(1.0 / math.tan(ctx.theta / 2.0))
    if name == "omega_bar":
        if ctx.q < 8:
            raise UnsupportedQ("the intersection domain is only modelled for q >= 8")
        return 2.0 * math.log(c * (1.0 + c))
    if name == "omega_a":
        raise InfiniteArea("the additive Veech domain has infinite area")
    raise NoClosedForm(f"no closed-form area for {name}")


def _log_dist(x: float, delta: ExtendedReal, tol: float) -> float:
    if delta is INF:
        return 0.0
    dist = abs(x - delta)
    if dist <= tol:
        raise InfiniteArea(f"boundary pole {delta!r} at interval endpoint {x!r}")
    return math.log(dist)


def area_analytic(d: Domain, tol: float = 1e-12) -> float:
    """Exact area as a sum of log-differences over matched x-subintervals."""
    bps = d.breakpoints
    total = 0.0
    for u, v in zip(bps, bps[1:]):
        mid = 0.5 * (u + v)
        du = d.upper_pole_at(mid)
        dl = d.lower_pole_at(mid)
        total += (_log_dist(v, du, tol) - _log_dist(u, du, tol)) - (
            _log_dist(v, dl, tol) - _log_dist(u, dl, tol)
        )
    return total


# -- serialisation ----------------------------------------------------------

def _fmt(v: ExtendedReal) -> str:
    return "inf" if v is INF else format(v + 0.0, ".17g")


def arcs_to_text(d: Domain) -> str:
    """Plain-text arc list: one ``side,x_lo,x_hi,delta`` line per arc."""
    lines = [f"# {d.name} q={d.q} x=[{_fmt(d.x_lo)},{_fmt(d.x_hi)}]", "side,x_lo,x_hi,delta"]
    for side, arcs in (("upper", d.upper), ("lower", d.lower)):
        for a in arcs:
            lines.append(f"{side},{_fmt(a.x_lo)},{_fmt(a.x_hi)},{_fmt(a.delta)}")
    return "\n".join(lines) + "\n"


def arcs_from_text(text: str, name: str = "parsed") -> Domain:
    upper, lower = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("side"):
            continue
        side, lo, hi, delta = line.split(",")
        arc = HyperbolaArc(float(lo), float(hi), INF if delta == "inf" else float(delta))
        (upper if side == "upper" else lower).append(arc)
    if not upper or not lower:
        raise ParameterError("arc text needs both upper and lower arcs")
    return Domain(name, upper[0].x_lo, upper[-1].x_hi, tuple(upper), tuple(lower))


# -- sampling ---------------------------------------------------------------

def _bin_boxes(d: Domain, edges: np.ndarray, y_cap: Optional[float]):
    """Per-bin y-range enclosing the domain (boundaries decrease along each arc)."""
    lo_e, hi_e = edges[:-1], edges[1:]
    top = np.full(lo_e.shape, -np.inf)
    bot = np.full(lo_e.shape, np.inf)
    for arcs, is_upper in ((d.upper, True), (d.lower, False)):
        for a in arcs:
            s = np.maximum(lo_e, a.x_lo)
            e = np.minimum(hi_e, a.x_hi)
            m = s < e
            if not m.any():
                continue
            # evaluate just inside the piece so a pole at its end gives the right infinity
            if is_upper:
                top[m] = np.maximum(top[m], a(np.nextafter(s[m], np.inf)))
            else:
                bot[m] = np.minimum(bot[m], a(np.nextafter(e[m], -np.inf)))
    if y_cap is not None:
        top = np.minimum(top, y_cap)
        bot = np.maximum(bot, -y_cap)
    if not (np.isfinite(top).all() and np.isfinite(bot).all()):
        raise InfiniteArea(f"{d.name}: unbounded fibres, pass y_cap to sample")
    return top, bot


def sample_uniform(d: Domain, n: int, rng: np.random.Generator, bins: int = 1000,
                   y_cap: Optional[float] = None) -> np.ndarray:
    """n points uniform on the domain (truncated to |y| <= y_cap if given).

    Rejection sampling from the bounding box of each x-bin, with bins drawn in
    proportion to their box area.
    """
    edges = np.linspace(d.x_lo, d.x_hi, bins + 1)
    top, bot = _bin_boxes(d, edges, y_cap)
    w = (edges[1:] - edges[:-1]) * (top - bot)
    prob = w / w.sum()
    out = np.empty((0, 2))
    while len(out) < n:
        m = int(1.3 * (n - len(out))) + 16
        b = rng.choice(bins, size=m, p=prob)
        xs = edges[b] + rng.random(m) * (edges[b + 1] - edges[b])
        ys = bot[b] + rng.random(m) * (top[b] - bot[b])
        ok = (ys < d.upper_at(xs)) & (ys > d.lower_at(xs)) & (xs > d.x_lo) & (xs < d.x_hi)
        out = np.vstack([out, np.column_stack([xs[ok], ys[ok]])])
    return out[:n]


def sample_fiber(d: Domain, x_lo: float, x_hi: float, n: int, rng: np.random.Generator,
                 tol: float = 1e-9) -> np.ndarray:
    """n points with x uniform in [x_lo, x_hi] and y uniform on the fibre strictly inside."""
    xs = x_lo + rng.random(n) * (x_hi - x_lo)
    lo = d.lower_at(xs) + 2 * tol
    hi = d.upper_at(xs) - 2 * tol
    ys = lo + rng.random(n) * (hi - lo)
    return np.column_stack([xs, ys])
