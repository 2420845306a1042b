"""Empirical side of the natural-extension method: orbit clouds, boundary-pole
fitting, and bijectivity checks of candidate domains.

Bijectivity is checked in both directions.  Forward: uniform points p of the
domain must have T(p) in the domain.  Backward: every uniform point must have
exactly one preimage in the domain.  Preimages are enumerated exactly: each
branch is a power of a parabolic element times a finite part B, and the
domain forces the pole delta of the preimage hyperbola outside the "delta
hole" of the branch's x-range, which bounds the admissible powers.  Each
candidate is then confirmed by checking that the map's own step there uses
that very branch, so zero preimages is a backward escape and two or more is
an injectivity collision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .domains import Domain, Membership, classify, sample_uniform
from .errors import InsufficientData, ParameterError
from .maps import map_interval
from .moebius import GroupContext, MoebiusMap

DEFAULT_SEED = 20240229
BURN_IN = 100
CHUNK = 1 << 16


# -- clouds -----------------------------------------------------------------

@dataclass
class CloudReport:
    """Planar orbit points after burn-in, with per-bin y extremes.

    ``lo_pt``/``hi_pt`` hold the (x, y) of the lowest/highest point in each bin
    (NaN for empty bins).
    """

    map_id: str
    q: int
    points: np.ndarray
    escaped: int
    edges: np.ndarray
    counts: np.ndarray
    lo_pt: np.ndarray
    hi_pt: np.ndarray
    burn_in: int = BURN_IN
    terminations: list = field(default_factory=list)

    @property
    def bounds(self) -> np.ndarray:
        """(bins, 2) array of per-bin (min y, max y)."""
        return np.column_stack([self.lo_pt[:, 1], self.hi_pt[:, 1]])

    @property
    def insufficient(self) -> bool:
        """True when the typical bin holds too few points to trace a boundary."""
        return bool(np.median(self.counts) < 5)

    def to_csv(self) -> str:
        lines = ["step,x,y"]
        start = self.burn_in
        for i, (x, y) in enumerate(self.points):
            lines.append(f"{start + i},{x:.17g},{y:.17g}")
        return "\n".join(lines) + "\n"


def _bin_extremes(pts: np.ndarray, edges: np.ndarray):
    bins = len(edges) - 1
    counts = np.zeros(bins, dtype=np.int64)
    lo_pt = np.full((bins, 2), np.nan)
    hi_pt = np.full((bins, 2), np.nan)
    if len(pts) == 0:
        return counts, lo_pt, hi_pt
    b = np.clip(np.searchsorted(edges, pts[:, 0], side="right") - 1, 0, bins - 1)
    counts = np.bincount(b, minlength=bins)
    order = np.lexsort((pts[:, 1], b))  # by bin, then y
    sb = b[order]
    first = np.searchsorted(sb, np.arange(bins), side="left")
    last = np.searchsorted(sb, np.arange(bins), side="right") - 1
    full = counts > 0
    lo_pt[full] = pts[order[first[full]]]
    hi_pt[full] = pts[order[last[full]]]
    return counts, lo_pt, hi_pt


def simulate_cloud(ctx: GroupContext, map_id: str, p0, n: int, bins: int = 200,
                   burn_in: int = BURN_IN) -> CloudReport:
    """n planar-orbit points after burn-in; an aborted orbit restarts nearby."""
    lo, hi = map_interval(ctx, map_id)
    if map_id == "f":
        raise ParameterError("the original Rosen map has no planar extension here")
    if not (lo - ctx.tol <= p0[0] <= hi + ctx.tol):
        raise ParameterError(f"start x = {p0[0]!r} outside [{lo:.6g}, {hi:.6g}]")
    need = n + burn_in
    xs_all, ys_all = [], []
    x, y = float(p0[0]), float(p0[1])
    escaped = 0
    causes = []
    got = 0
    while got < need:
        xs, ys, status = kernels.planar_orbit(ctx, map_id, x, y, need - got)
        if got > 0:
            xs, ys = xs[1:], ys[1:]
        xs_all.append(xs)
        ys_all.append(ys)
        got += len(xs)
        if status == 0:
            break
        escaped += 1
        causes.append(kernels.STATUS_NAMES[int(status)])
        if escaped > 1000:
            break
        # restart just off the bad point, towards the middle of the interval
        x = xs[-1] if len(xs) else x
        y = ys[-1] if len(ys) else y
        x = x - math.copysign(1e-7, x) if abs(x) > 1e-6 else 1e-7
    pts = np.column_stack([np.concatenate(xs_all), np.concatenate(ys_all)])[:need]
    rep = cloud_from_points(ctx, map_id, pts, bins, burn_in)
    rep.escaped, rep.terminations = escaped, causes
    return rep


def cloud_from_points(ctx: GroupContext, map_id: str, pts, bins: int = 200,
                      burn_in: int = BURN_IN) -> CloudReport:
    """CloudReport from an orbit given as an (N, 2) array, start point first."""
    lo, hi = map_interval(ctx, map_id)
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)[burn_in:]
    edges = np.linspace(lo, hi, bins + 1)
    counts, lo_pt, hi_pt = _bin_extremes(pts, edges)
    return CloudReport(map_id, ctx.q, pts, 0, edges, counts, lo_pt, hi_pt, burn_in)


def fit_boundary_delta(report: CloudReport, x_window, side: str, method: str = "envelope",
                       min_bins: int = 10) -> tuple[float, float]:
    """Pole delta of the boundary piece y = 1/(x - delta) seen in a cloud.

    ``method="lsq"`` is the plain least-squares fit over the per-bin extremes
    (slope-one regression of 1/y on x).  Bin extremes sit inside the domain,
    so that fit is biased inwards by the typical gap between the extreme and
    the true boundary.  ``method="envelope"`` (default) returns the supporting
    hyperbola instead: the curve of the family through the cloud point of the
    window that lies outermost, which converges much faster.  The residual is
    the largest |y - 1/(x - delta)| over the bin extremes.
    """
    if side not in ("upper", "lower"):
        raise ParameterError("side must be 'upper' or 'lower'")
    a, b = float(x_window[0]), float(x_window[1])
    centers = 0.5 * (report.edges[:-1] + report.edges[1:])
    sel = (centers >= a) & (centers <= b) & (report.counts > 0)
    ext = (report.hi_pt if side == "upper" else report.lo_pt)[sel]
    sign = 1.0 if side == "upper" else -1.0
    ext = ext[sign * ext[:, 1] > 0] if len(ext) else ext
    if len(ext) < min_bins:
        raise InsufficientData(f"{len(ext)} usable bins in window [{a}, {b}], need {min_bins}")
    ex, ey = ext[:, 0], ext[:, 1]
    if method == "lsq":
        delta = float(np.mean(ex - 1.0 / ey))
    elif method == "envelope":
        pts = report.points
        m = (pts[:, 0] >= a) & (pts[:, 0] <= b) & (sign * pts[:, 1] > 0)
        d = pts[m, 0] - 1.0 / pts[m, 1]
        delta = float(d.max() if side == "upper" else d.min())
    else:
        raise ParameterError(f"unknown fit method {method!r}")
    with np.errstate(divide="ignore"):
        resid = float(np.max(np.abs(ey - 1.0 / (ex - delta))))
    return delta, resid


# -- invariance -------------------------------------------------------------

@dataclass
class InvarianceReport:
    domain: str
    map_id: str
    q: int
    samples: int
    seed: int
    tol: float
    forward_escape: float
    backward_escape: float
    collisions: int
    forward_shell: int
    backward_shell: int
    undefined: int
    y_cap: Optional[float] = None
    #: False when some branch family's powers had to be capped (see KCAP)
    preimages_complete: bool = True

    def passed(self, threshold: float = 1e-4) -> bool:
        return (self.forward_escape < threshold and self.backward_escape < threshold
                and self.collisions == 0)

    def lines(self) -> list[str]:
        return [
            f"domain            {self.domain}",
            f"map               {self.map_id}",
            f"q                 {self.q}",
            f"samples           {self.samples}",
            f"seed              {self.seed}",
            f"tol               {self.tol:g}",
            f"y_cap             {self.y_cap if self.y_cap is not None else '-'}",
            f"forward_escape    {self.forward_escape:.3e}",
            f"backward_escape   {self.backward_escape:.3e}",
            f"collisions        {self.collisions}",
            f"forward_shell     {self.forward_shell}",
            f"backward_shell    {self.backward_shell}",
            f"undefined_steps   {self.undefined}",
            f"preimage_search   {'exact' if self.preimages_complete else f'capped at |k| <= {KCAP}'}",
            f"verdict           {'PASS' if self.passed() else 'FAIL'}",
        ]


@dataclass(frozen=True)
class _Family:
    """Branches Par^k B with x in [x_lo, x_hi] and k in [kmin, kmax]."""

    B: MoebiusMap
    par: str
    x_lo: float
    x_hi: float
    kmin: int = -(10**9)
    kmax: int = 10**9


class _Parabolic:
    """Coordinate u = phi(z) in which the parabolic element is u -> u + t."""

    def __init__(self, ctx: GroupContext, kind: str):
        h = ctx.mu / 2.0
        if kind == "P":
            self.fix, self.t = None, ctx.mu
        elif kind == "S":
            self.fix, self.t = None, ctx.lam
        elif kind == "PRinv":
            self.fix, self.t = h, ctx.parabolic_c
        elif kind == "PinvR":
            self.fix, self.t = -h, -ctx.parabolic_c
        else:
            raise ParameterError(kind)

    def phi(self, z):
        if self.fix is None:
            return z
        with np.errstate(divide="ignore"):
            return 1.0 / (z - self.fix)

    def phi_inv(self, u):
        if self.fix is None:
            return u
        with np.errstate(divide="ignore"):
            return self.fix + 1.0 / u

    def pole(self):
        """Point sent to infinity by phi (infinity itself when phi is the identity)."""
        return math.inf if self.fix is None else self.fix


def _families(ctx: GroupContext, map_id: str) -> list[_Family]:
    h, al = ctx.mu / 2.0, ctx.alpha
    ident = MoebiusMap(1.0, 0.0, 0.0, 1.0)
    if map_id == "h":
        return [_Family(ctx.T, "S", -ctx.lam / 2, ctx.lam / 2)]
    if map_id == "k":
        return [_Family(ctx.U_pow(-1), "P", 0.0, h), _Family(ctx.U_pow(1), "P", -h, 0.0)]
    if map_id == "a":
        return [_Family(ctx.R_pow(j), "P", -h, h) for j in range(1, ctx.n)]
    if map_id == "v":
        fams = [_Family(ctx.R_pow(j), "P", -al, al) for j in range(1, ctx.n)]
        fams.append(_Family(ident, "PRinv", al, h, kmin=1))
        fams.append(_Family(ident, "PinvR", -h, -al, kmin=1))
        return fams
    raise ParameterError(f"no preimage enumeration for map {map_id!r}")


def _mob(M: MoebiusMap, z):
    with np.errstate(divide="ignore", invalid="ignore"):
        return (M.a * z + M.b) / (M.c * z + M.d)


KCAP = 64


def _k_window(ctx, dom: Domain, fam: _Family, par: _Parabolic, dprime):
    """Integer range [k_lo, k_hi] of admissible parabolic powers for each target pole.

    The third value is False when the hole does not bound the powers (the
    domain does not suit the map); the range is then capped at |k| <= KCAP.
    """
    up, lo = dom.delta_hole(fam.x_lo, fam.x_hi)
    # G = phi o B maps the complement of the hole (through infinity) to a bounded interval
    Binv = fam.B.inverse()
    pole = par.pole()
    if pole == math.inf:
        g_pole = Binv.a / Binv.c if abs(Binv.c) > 1e-14 else math.inf
    else:
        g_pole = float(_mob(Binv, pole))
    if not (up < g_pole < lo):
        n = len(dprime)
        return (np.full(n, float(max(-KCAP, fam.kmin))), np.full(n, float(min(KCAP, fam.kmax))),
                False)
    ends = [float(par.phi(_mob(fam.B, up))), float(par.phi(_mob(fam.B, lo)))]
    g_lo, g_hi = min(ends), max(ends)
    u = par.phi(dprime)
    k1, k2 = (u - g_hi) / par.t, (u - g_lo) / par.t
    k_lo = np.maximum(np.floor(np.minimum(k1, k2)) - 1, fam.kmin)
    k_hi = np.minimum(np.ceil(np.maximum(k1, k2)) + 1, fam.kmax)
    return k_lo, k_hi, True


def _canon(m: np.ndarray) -> np.ndarray:
    """Row-wise determinant-one, sign-canonical matrices (same rule as MoebiusMap)."""
    a, b, c, d = m.T
    r = np.sqrt(np.abs(a * d - b * c))
    m = m / r[:, None]
    flip = ~((m[:, 2] > 1e-12) | ((np.abs(m[:, 2]) <= 1e-12) & (m[:, 3] > 0)))
    m[flip] *= -1.0
    return m


def _mat_mul(m: np.ndarray, n: np.ndarray) -> np.ndarray:
    return np.column_stack([
        m[:, 0] * n[:, 0] + m[:, 1] * n[:, 2], m[:, 0] * n[:, 1] + m[:, 1] * n[:, 3],
        m[:, 2] * n[:, 0] + m[:, 3] * n[:, 2], m[:, 2] * n[:, 1] + m[:, 3] * n[:, 3],
    ])


def _branch_mats(ctx, fam: _Family, k: np.ndarray) -> np.ndarray:
    """Canonical matrices Par^k B for an array of powers k."""
    one, zero = np.ones_like(k), np.zeros_like(k)
    if fam.par in ("P", "S"):
        t = ctx.mu if fam.par == "P" else ctx.lam
        par = np.column_stack([one, k * t, zero, one])
    else:
        h = ctx.mu / 2.0
        e = k * ctx.parabolic_c
        sgn = 1.0 if fam.par == "PRinv" else -1.0
        par = np.column_stack([1.0 + e * h, -sgn * e * h * h, sgn * e, 1.0 - e * h])
    B = np.tile([fam.B.a, fam.B.b, fam.B.c, fam.B.d], (len(k), 1))
    return _canon(_mat_mul(par, B))


def _branch_ok(ctx, map_id, x0, expected, rel=1e-8):
    """True where the map's own step at x0 uses exactly the expected branch."""
    mats, _, _, status = kernels.step_many(ctx, map_id, x0)
    scale = 1.0 + np.abs(expected).max(axis=1)
    return (status == 0) & (np.abs(mats - expected).max(axis=1) <= rel * scale)


def _candidates(ctx, dom: Domain, map_id: str, X, Y, tol):
    """All preimages of the points (X, Y) under the planar map, branch-confirmed.

    Returns (owner, x, y, membership, branch matrices, bounded) with one row per
    preimage lying in the domain or its tol-shell.
    """
    owners, cx, cy, mem, mats = [], [], [], [], []
    bounded = True
    with np.errstate(divide="ignore", invalid="ignore"):
        dprime = X - 1.0 / Y
    finite = np.isfinite(dprime)
    for fam in _families(ctx, map_id):
        par = _Parabolic(ctx, fam.par)
        Binv = fam.B.inverse()
        k_lo, k_hi, ok_window = _k_window(ctx, dom, fam, par, dprime)
        bounded &= ok_window
        width = np.where(finite, k_hi - k_lo, -1)
        if width.max(initial=-1) < 0:
            continue
        ux, ud = par.phi(X), par.phi(dprime)
        for off in range(int(width.max()) + 1):
            sel = np.nonzero(finite & (width >= off))[0]
            if len(sel) == 0:
                break
            k = k_lo[sel] + off
            x0 = _mob(Binv, par.phi_inv(ux[sel] - k * par.t))
            d0 = _mob(Binv, par.phi_inv(ud[sel] - k * par.t))
            with np.errstate(divide="ignore", invalid="ignore"):
                y0 = 1.0 / (x0 - d0)
            ok = (np.isfinite(x0) & np.isfinite(y0)
                  & (x0 >= fam.x_lo - tol) & (x0 <= fam.x_hi + tol))
            if not ok.any():
                continue
            sel, k, x0, y0 = sel[ok], k[ok], x0[ok], y0[ok]
            m = classify(dom, x0, y0, tol)
            keep = m != Membership.OUTSIDE
            if not keep.any():
                continue
            sel, k, x0, y0, m = sel[keep], k[keep], x0[keep], y0[keep], m[keep]
            exp = _branch_mats(ctx, fam, k)
            good = _branch_ok(ctx, map_id, x0, exp)
            owners.append(sel[good])
            cx.append(x0[good])
            cy.append(y0[good])
            mem.append(m[good])
            mats.append(exp[good])
    if not owners:
        e = np.empty(0)
        return e.astype(np.int64), e, e, e.astype(np.int8), np.empty((0, 4)), bounded
    return (np.concatenate(owners), np.concatenate(cx), np.concatenate(cy),
            np.concatenate(mem), np.concatenate(mats), bounded)


def _forward(ctx, map_id, xs, ys):
    """Planar images via the delta form: X is the step's image, Y = 1/(X - M.delta).

    Equal to the (x, y) formula of T_M, but better conditioned for the large
    parabolic powers near the fixed points of the multiplicative map.
    """
    mats, X, _, status = kernels.step_many(ctx, map_id, xs)
    a, b, c, d = mats.T
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = xs - 1.0 / ys
        dimg = np.where(np.isfinite(delta), (a * delta + b) / (c * delta + d), a / c)
        Y = 1.0 / (X - dimg)
    bad = (status != 0) | ~np.isfinite(X) | ~np.isfinite(Y)
    return X, Y, bad


def _preimages(ctx, dom: Domain, map_id: str, X, Y, tol):
    if map_id != "r":
        own, x0, y0, m0, _, bounded = _candidates(ctx, dom, map_id, X, Y, tol)
        return own, x0, y0, m0, bounded
    # r = k o k: preimages of preimages, confirmed against the composed branch
    o1, x1, y1, _, m1, b1 = _candidates(ctx, dom, "k", X, Y, tol)
    o2, x0, y0, m0, m2, b2 = _candidates(ctx, dom, "k", x1, y1, tol)
    owner = o1[o2]
    good = _branch_ok(ctx, "r", x0, _canon(_mat_mul(m1[o2], m2)))
    return owner[good], x0[good], y0[good], m0[good], b1 and b2


def _dedupe(owner, xs, ys):
    """Drop repeated (owner, point) pairs found through overlapping families."""
    if len(owner) == 0:
        return owner, xs, ys
    key = np.column_stack([owner, np.round(xs, 9), np.round(ys, 9)])
    _, idx = np.unique(key, axis=0, return_index=True)
    idx = np.sort(idx)
    return owner[idx], xs[idx], ys[idx]


def verify_invariance(ctx: GroupContext, d: Domain, map_id: str, samples: int = 100_000,
                      tol: float = 1e-9, seed: Optional[int] = None,
                      y_cap: Optional[float] = None) -> InvarianceReport:
    """Forward escape, backward escape and collision counts for T on d.

    Samples are drawn in fixed-size chunks, each from its own generator derived
    from (seed, chunk index), so the result does not depend on how the work is
    split.  Points within tol of the boundary are counted in the shell columns,
    never as escapes.  Domains of infinite area are sampled with |y| <= y_cap
    (default 50).
    """
    seed = DEFAULT_SEED if seed is None else int(seed)
    if y_cap is None and d.name == "omega_a":
        y_cap = 50.0
    fwd_esc = bwd_esc = coll = fwd_shell = bwd_shell = undefined = 0
    complete = True
    done = 0
    chunk_id = 0
    while done < samples:
        m = min(CHUNK, samples - done)
        rng = np.random.default_rng([seed, chunk_id])
        pts = sample_uniform(d, m, rng, y_cap=y_cap)
        xs, ys = pts[:, 0], pts[:, 1]
        # forward
        X, Y, bad = _forward(ctx, map_id, xs, ys)
        undefined += int(bad.sum())
        memb = classify(d, X[~bad], Y[~bad], tol)
        fwd_esc += int((memb == Membership.OUTSIDE).sum())
        fwd_shell += int((memb == Membership.BOUNDARY).sum())
        # backward: count confirmed preimages of each sample
        own, px, py, pm, bounded = _preimages(ctx, d, map_id, xs, ys, tol)
        complete &= bounded
        inside = pm == Membership.INSIDE
        o_in, _, _ = _dedupe(own[inside], px[inside], py[inside])
        n_in = np.bincount(o_in, minlength=m)
        shell = np.zeros(m, dtype=bool)
        shell[own[~inside]] = True
        shell |= classify(d, xs, ys, tol) != Membership.INSIDE
        bwd_shell += int((shell & (n_in == 0)).sum())
        bwd_esc += int((~shell & (n_in == 0)).sum())
        coll += int((n_in >= 2).sum())
        done += m
        chunk_id += 1
    return InvarianceReport(d.name, map_id, ctx.q, samples, seed, tol,
                            fwd_esc / samples, bwd_esc / samples, coll,
                            fwd_shell, bwd_shell, undefined, y_cap, complete)
