"""Command line front end: ``cfx <subcommand> ...``.

Exit status is 0 on success, 1 on a parameter error and 2 when a
verification fails.  ``CFX_SEED`` in the environment overrides ``--seed``.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from contextlib import contextmanager

import numpy as np

from . import analysis, discovery
from .domains import (
    DOMAIN_MAP,
    DOMAIN_NAMES,
    area_analytic,
    area_closed_form,
    arcs_to_text,
    build_domain,
)
from .errors import CfxError, EmptyFiber, InfiniteArea, NoClosedForm, NoReturn, ParameterError
from .maps import get_step, orbit as interval_orbit
from .moebius import make_context
from .planar import PlanarPoint, planar_apply

EXIT_OK, EXIT_PARAM, EXIT_FAIL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


def _g(v) -> str:
    return format(v, ".17g")


def _context(q: int):
    try:
        return make_context(q)
    except RuntimeError as exc:
        raise ParameterError(str(exc))


def _seed(args) -> int:
    env = os.environ.get("CFX_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ParameterError(f"CFX_SEED must be an integer, got {env!r}")
    return args.seed


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="\n") as fh:
            yield fh


# -- subcommands ------------------------------------------------------------

def cmd_ctx(args) -> int:
    rows = _context(args.q).table()
    if args.csv:
        print("name,value")
        for k, v in rows:
            print(f"{k},{v}")
    else:
        w = max(len(k) for k, _ in rows)
        for k, v in rows:
            print(f"{k:<{w}}  {v}")
    return EXIT_OK


def cmd_orbit(args) -> int:
    ctx = _context(args.q)
    if args.n < 0:
        raise ParameterError("--n must be non-negative")
    if args.planar:
        if args.map == "f":
            raise ParameterError("the original Rosen map has no planar extension")
        # the branch at each step is chosen from the planar point's own x
        step = get_step(args.map)
        p = PlanarPoint(float(args.x), float(args.y))
        rows, termination = [(0, p.x, p.y, "", "")], None
        for i in range(1, args.n + 1):
            try:
                s = step(ctx, p.x)
                p = planar_apply(s.matrix, p)
            except CfxError as exc:
                if isinstance(exc, ParameterError) and i == 1:
                    raise
                termination = f"{type(exc).__name__}: {exc}"
                break
            rows.append((i, p.x, p.y, str(s.digit), s.tau))
        header = "step,x,y,digit,tau"
    else:
        orb = interval_orbit(ctx, args.map, args.x, args.n)
        if not orb.steps and orb.termination and "ParameterError" in orb.termination:
            raise ParameterError(orb.termination)
        termination = orb.termination
        rows = [(0, float(args.x), "", "")]
        for i, s in enumerate(orb.steps, 1):
            rows.append((i, s.image, str(s.digit), s.tau))
        header = "step,x,digit,tau"
    with _output(args.out) as fh:
        fh.write(header + "\n")
        for r in rows:
            fh.write(",".join(str(v) if isinstance(v, (int, str)) else _g(v) for v in r) + "\n")
    if termination:
        print(f"orbit stopped after {len(rows) - 1} steps: {termination}", file=sys.stderr)
    return EXIT_OK


def cmd_domain(args) -> int:
    ctx = _context(args.q)
    d = build_domain(ctx, args.which)
    if args.arcs or not args.verify:
        sys.stdout.write(arcs_to_text(d))
    if not args.verify:
        return EXIT_OK
    map_id = args.map or DOMAIN_MAP.get(d.name)
    if map_id is None:
        raise ParameterError(f"{d.name} has no map of its own; pass --map")
    rep = discovery.verify_invariance(ctx, d, map_id, samples=args.samples, tol=args.tol,
                                      seed=_seed(args), y_cap=args.y_cap)
    for line in rep.lines():
        print(line)
    return EXIT_OK if rep.passed() else EXIT_FAIL


def cmd_areas(args) -> int:
    ctx = _context(args.q)
    rows = []
    for name in DOMAIN_NAMES:
        try:
            closed = area_closed_form(ctx, name)
        except InfiniteArea:
            closed = math.inf
        except NoClosedForm:
            closed = None
        try:
            numeric = area_analytic(build_domain(ctx, name))
        except InfiniteArea:
            numeric = math.inf
        if closed is None or math.isinf(numeric):
            diff = ""
        else:
            diff = f"{abs(closed - numeric):.3e}"
        rows.append((name, "-" if closed is None else f"{closed:.12g}", f"{numeric:.12g}", diff))
    print(f"{'domain':<10} {'closed form':>18} {'analytic':>18} {'|diff|':>10}")
    for r in rows:
        print(f"{r[0]:<10} {r[1]:>18} {r[2]:>18} {r[3]:>10}")
    c_v = area_closed_form(ctx, "omega_v")
    c_r = area_closed_form(ctx, "omega_r")
    bar_c = area_closed_form(ctx, "omega_bar")
    bar_a = area_analytic(build_domain(ctx, "omega_bar"))
    print()
    print("ratios (denominators are the closed-form areas c_v of omega_v and c_r of omega_r)")
    print(f"lambda(omega_bar)/c_v  closed {bar_c / c_v:.12g}  analytic {bar_a / c_v:.12g}")
    print(f"lambda(omega_bar)/c_r  closed {bar_c / c_r:.12g}  analytic {bar_a / c_r:.12g}")
    return EXIT_OK


def cmd_compare(args) -> int:
    ctx = _context(args.q)
    if args.starts < 1:
        raise ParameterError("--starts must be positive")
    seed = _seed(args)
    starts = analysis.random_starts(ctx, args.starts, seed)
    rep = analysis.compare_first_returns(ctx, starts, max_iters=args.max_iters, seed=seed)
    with _output(args.out) as fh:
        fh.write(rep.to_csv())
    n_ok = sum(r.agree for r in rep.records)
    print(f"q={ctx.q} seed={seed} agreement {n_ok}/{len(rep.records)} "
          f"(refined {sum(r.refined for r in rep.records)}; beta := alpha = {rep.beta:.17g})",
          file=sys.stderr)
    for r in rep.disagreements:
        print(f"disagreement at start ({_g(r.start[0])}, {_g(r.start[1])}) {r.note}", file=sys.stderr)
    return EXIT_OK if rep.agreement_rate >= 0.999 else EXIT_FAIL


def cmd_induction(args) -> int:
    ctx = _context(args.q)
    try:
        rows = analysis.slow_return_experiment(ctx, args.k, samples=args.samples, seed=_seed(args))
    except (EmptyFiber, NoReturn) as exc:
        print(f"slow-return experiment failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.csv:
        print("k,x_lo,x_hi,sampled,min_index,max_index,passed")
        for r in rows:
            print(f"{r.k},{_g(r.x_lo)},{_g(r.x_hi)},{r.sampled},{r.min_index},{r.max_index},{int(r.passed)}")
    else:
        print(f"{'k':>3} {'x_lo':>22} {'x_hi':>22} {'sampled':>8} {'min':>4} {'max':>4}  ok")
        for r in rows:
            print(f"{r.k:>3} {r.x_lo:>22.17g} {r.x_hi:>22.17g} {r.sampled:>8} "
                  f"{r.min_index:>4} {r.max_index:>4}  {'yes' if r.passed else 'NO'}")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cfx", description="Rosen and Veech continued-fraction maps and their natural extensions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def q_arg(sp):
        sp.add_argument("--q", type=int, default=8, help="even index q >= 6 (default 8)")

    sp = sub.add_parser("ctx", help="constant table of the group context")
    q_arg(sp)
    sp.add_argument("--csv", action="store_true")
    sp.set_defaults(func=cmd_ctx)

    sp = sub.add_parser("orbit", help="orbit of an interval map, optionally planar")
    sp.add_argument("--map", required=True, choices=list("fhkrav"))
    q_arg(sp)
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--y", type=float, default=0.0)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--planar", action="store_true")
    sp.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    sp.set_defaults(func=cmd_orbit)

    sp = sub.add_parser("domain", help="domain arcs and the invariance check")
    sp.add_argument("--which", required=True, choices=list(DOMAIN_NAMES))
    q_arg(sp)
    sp.add_argument("--arcs", action="store_true")
    sp.add_argument("--verify", action="store_true")
    sp.add_argument("--map", choices=list("hkrav"), help="map to verify with (default: the domain's own)")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--y-cap", type=float, default=None)
    sp.add_argument("--seed", type=int, default=discovery.DEFAULT_SEED)
    sp.set_defaults(func=cmd_domain)

    sp = sub.add_parser("areas", help="closed-form and analytic areas")
    q_arg(sp)
    sp.set_defaults(func=cmd_areas)

    sp = sub.add_parser("compare", help="first returns of T_r and T_v to the intersection domain")
    q_arg(sp)
    sp.add_argument("--starts", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=discovery.DEFAULT_SEED)
    sp.add_argument("--max-iters", type=int, default=analysis.MAX_ITERS)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("induction", help="slow-return experiment (q divisible by 4)")
    q_arg(sp)
    sp.add_argument("--k", type=int, default=5, help="largest k (>= 2)")
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--csv", action="store_true")
    sp.set_defaults(func=cmd_induction)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"cfx: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except CfxError as exc:
        print(f"cfx: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
