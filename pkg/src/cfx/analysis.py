"""Comparison of the doubled Rosen and multiplicative Veech maps: entropy
estimates, first returns to the intersection domain, induction indices and
the slow-return experiment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels, precise
from .domains import Domain, Membership, build_domain, classify, contains, sample_fiber, sample_uniform
from .errors import CfxError, EmptyFiber, NoReturn, OrbitTerminated, ParameterError
from .maps import get_step, map_interval
from .moebius import INF, GroupContext, act

MAX_ITERS = 100_000
AGREE_TOL = 1e-7


# -- entropy ----------------------------------------------------------------

@dataclass
class EntropyEstimate:
    """Birkhoff mean of the return time; unpacks as (h, stderr)."""

    h: float
    stderr: float
    steps: int
    restarts: int = 0
    batch_means: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __iter__(self):
        return iter((self.h, self.stderr))


def entropy_estimate(ctx: GroupContext, map_id: str, x0: float, n: int, nbatch: int = 100,
                     restart: bool = True, max_restarts: int = 1000,
                     seed: int = 0) -> EntropyEstimate:
    """h(f) = mean of tau_f along an orbit (Rohlin), stderr from batch means.

    An orbit that hits a measure-zero bad point is restarted from a slightly
    perturbed point and the restart is counted.  With ``restart=False`` an
    orbit that dies before n/2 steps raises OrbitTerminated.
    """
    if n < 10_000:
        raise ParameterError("entropy estimate needs n >= 10^4")
    lo, hi = map_interval(ctx, map_id)
    rng = np.random.default_rng(seed)
    sums = np.zeros(nbatch)
    counts = np.zeros(nbatch, dtype=np.int64)
    start, restarts, x = 0, 0, float(x0)
    while start < n:
        s, c, done, status, x = kernels.birkhoff(ctx, map_id, x, n, nbatch, start)
        sums += s
        counts += c
        start += done
        if status == 0 or start >= n:
            break
        if not restart:
            if start < n / 2:
                raise OrbitTerminated(
                    f"orbit stopped after {start} of {n} steps ({kernels.STATUS_NAMES[status]})")
            break
        restarts += 1
        if restarts > max_restarts:
            raise OrbitTerminated(f"more than {max_restarts} restarts needed")
        x = float(np.clip(x + rng.uniform(-1e-6, 1e-6), lo + 1e-6, hi - 1e-6))
        if abs(x) < 1e-6:
            x = 1e-6
    full = counts > 0
    means = sums[full] / counts[full]
    total = int(counts.sum())
    h = float(sums.sum() / total)
    stderr = float(means.std(ddof=1) / math.sqrt(len(means))) if len(means) > 1 else math.nan
    return EntropyEstimate(h, stderr, total, restarts, means)


# -- planar stepping and returns -------------------------------------------

def planar_step_delta(ctx: GroupContext, map_id: str, p):
    """T(p) in delta form: x' = step image, y' = 1/(x' - M.delta).

    Same map as the (x, y) formula of T_M, better conditioned for the large
    parabolic powers of the multiplicative Veech map.
    """
    x, y = float(p[0]), float(p[1])
    s = get_step(map_id)(ctx, x)
    delta = INF if y == 0.0 else x - 1.0 / y
    d2 = act(s.matrix, delta)
    y2 = 0.0 if d2 is INF else 1.0 / (s.image - d2)
    return s.image, y2


def first_return(ctx: GroupContext, map_id: str, p, dom: Domain,
                 max_iters: int = MAX_ITERS, tol: float = 1e-9):
    """(point, count) of the first iterate n >= 1 of T with T^n(p) Inside dom."""
    q = (float(p[0]), float(p[1]))
    for i in range(1, int(max_iters) + 1):
        q = planar_step_delta(ctx, map_id, q)
        if contains(dom, q, tol) == Membership.INSIDE:
            return q, i
    raise NoReturn(f"no return to {dom.name} within {max_iters} iterations")


def induction_index(ctx: GroupContext, map_id: str, p, max_iters: int = MAX_ITERS,
                    dom: Optional[Domain] = None) -> int:
    """Smallest n >= 1 with T^n(p) in the intersection domain."""
    dom = dom or build_domain(ctx, "omega_bar")
    if contains(dom, p) != Membership.INSIDE:
        raise ParameterError(f"start {tuple(p)} is not inside {dom.name}")
    return first_return(ctx, map_id, p, dom, max_iters)[1]


@dataclass
class ComparisonRecord:
    start: tuple
    r_point: Optional[tuple]
    r_count: Optional[int]
    v_point: Optional[tuple]
    v_count: Optional[int]
    agree: bool
    note: str = ""
    #: returns recomputed at extended precision after a double-precision disagreement
    refined: bool = False


@dataclass
class ComparisonReport:
    q: int
    records: list
    tol: float = AGREE_TOL
    #: the agreement lemma's unnamed right endpoint, taken to be alpha
    beta: Optional[float] = None
    seed: Optional[int] = None

    @property
    def agreement_rate(self) -> float:
        return sum(r.agree for r in self.records) / max(1, len(self.records))

    @property
    def disagreements(self) -> list:
        return [r for r in self.records if not r.agree]

    def to_csv(self) -> str:
        def f(v):
            return "" if v is None else format(v, ".17g")

        lines = ["start_x,start_y,r_x,r_y,r_count,v_x,v_y,v_count,agree,refined,note"]
        for r in self.records:
            rp = r.r_point or (None, None)
            vp = r.v_point or (None, None)
            lines.append(",".join([
                f(r.start[0]), f(r.start[1]), f(rp[0]), f(rp[1]),
                "" if r.r_count is None else str(r.r_count),
                f(vp[0]), f(vp[1]), "" if r.v_count is None else str(r.v_count),
                "1" if r.agree else "0", "1" if r.refined else "0", r.note,
            ]))
        return "\n".join(lines) + "\n"


def _close(a, b, tol):
    return all(abs(u - v) <= tol * (1.0 + abs(v)) for u, v in zip(a, b))


def _refine(ctx, dom, p, max_iters):
    """Both first returns at extended precision; None entries where none is found."""
    def inside(z):
        return contains(dom, z) == Membership.INSIDE

    out = {}
    for m in ("r", "v"):
        try:
            out[m] = precise.first_return(ctx.q, m, p, inside, max_iters) or (None, None)
        except (CfxError, ZeroDivisionError):
            out[m] = (None, None)
    return out


def compare_first_returns(ctx: GroupContext, starts: Sequence, max_iters: int = MAX_ITERS,
                          tol: float = AGREE_TOL, seed: Optional[int] = None,
                          refine: bool = True) -> ComparisonReport:
    """First T_r- and T_v-returns to the intersection domain from each start.

    Double precision first.  A return branch can expand by ~1e12, so when the
    two float returns disagree both are recomputed with :mod:`cfx.precise`
    (``refine=False`` keeps the float verdict).
    """
    dom = build_domain(ctx, "omega_bar")
    records = []
    for p in starts:
        p = (float(p[0]), float(p[1]))
        if contains(dom, p) != Membership.INSIDE:
            raise ParameterError(f"start {p} is not inside {dom.name}")
        out, notes = {}, []
        for m in ("r", "v"):
            try:
                out[m] = first_return(ctx, m, p, dom, max_iters)
            except CfxError as exc:
                out[m] = (None, None)
                notes.append(f"{m}: {type(exc).__name__}")
        (rp, rc), (vp, vc) = out["r"], out["v"]
        agree = rp is not None and vp is not None and _close(rp, vp, tol)
        refined = False
        if not agree and refine:
            out = _refine(ctx, dom, p, min(max_iters, 10_000))
            (rp, rc), (vp, vc) = out["r"], out["v"]
            agree = rp is not None and vp is not None and _close(rp, vp, tol)
            refined = True
        records.append(ComparisonRecord(p, rp, rc, vp, vc, agree, "; ".join(notes), refined))
    return ComparisonReport(ctx.q, records, tol, ctx.alpha, seed)


def random_starts(ctx: GroupContext, n: int, seed: int) -> np.ndarray:
    """n uniform points of the intersection domain."""
    return sample_uniform(build_domain(ctx, "omega_bar"), n, np.random.default_rng(seed))


# -- slow returns -----------------------------------------------------------

@dataclass
class SlowReturnRow:
    k: int
    x_lo: float
    x_hi: float
    sampled: int
    min_index: int
    max_index: int

    @property
    def passed(self) -> bool:
        return self.min_index >= self.k


def slow_return_interval(ctx: GroupContext, k: int) -> tuple[float, float]:
    """(R^{q/4} P^-1)^k applied to the endpoints of I, as a sorted pair."""
    if ctx.q % 4:
        raise ParameterError(f"q = {ctx.q} is not divisible by 4")
    M = (ctx.R_pow(ctx.q // 4) @ ctx.P_pow(-1)) ** k
    ends = [act(M, -ctx.mu / 2), act(M, ctx.mu / 2)]
    if any(e is INF for e in ends):
        raise EmptyFiber(f"k = {k}: an endpoint went to infinity")
    lo, hi = sorted(ends)
    h = ctx.mu / 2
    if lo < -h or hi > h:
        raise EmptyFiber(f"k = {k}: interval [{lo}, {hi}] leaves I")
    return lo, hi


def slow_return_experiment(ctx: GroupContext, k_max: int = 5, samples: int = 100,
                           seed: int = 0, max_iters: int = MAX_ITERS) -> list[SlowReturnRow]:
    """Induction indices of T_v over the fibres above (R^{q/4}P^-1)^k(I), k = 2..k_max."""
    if ctx.q % 4:
        raise ParameterError(f"q = {ctx.q} is not divisible by 4")
    if k_max < 2:
        raise ParameterError("k_max must be at least 2")
    dom = build_domain(ctx, "omega_bar")
    rows = []
    for k in range(2, k_max + 1):
        lo, hi = slow_return_interval(ctx, k)
        rng = np.random.default_rng([seed, k])
        pts = sample_fiber(dom, lo, hi, samples, rng)
        inside = classify(dom, pts[:, 0], pts[:, 1]) == Membership.INSIDE
        pts = pts[inside]
        if len(pts) == 0:
            raise EmptyFiber(f"k = {k}: no fibre points inside {dom.name}")
        idx = [first_return(ctx, "v", p, dom, max_iters)[1] for p in pts]
        rows.append(SlowReturnRow(k, lo, hi, len(pts), min(idx), max(idx)))
    return rows
