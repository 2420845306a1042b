import math

import mpmath as mp
import numpy as np
import pytest

from cfx import precise
from cfx.analysis import (
    ComparisonRecord,
    ComparisonReport,
    compare_first_returns,
    entropy_estimate,
    first_return,
    induction_index,
    planar_step_delta,
    random_starts,
    slow_return_experiment,
    slow_return_interval,
)
from cfx.domains import Membership, area_closed_form, build_domain, contains, sample_fiber
from cfx.errors import NoReturn, OrbitTerminated, ParameterError
from cfx.maps import get_step
from cfx.moebius import act, make_context
from cfx.planar import planar_apply


# -- entropy ----------------------------------------------------------------

def test_entropy_needs_long_orbit(ctx8):
    with pytest.raises(ParameterError):
        entropy_estimate(ctx8, "r", 0.3, 9999)


def test_entropy_is_rohlin_mean(ctx8):
    est = entropy_estimate(ctx8, "h", 0.3, 20_000, nbatch=10)
    taus = [s.tau for s in _orbit_taus(ctx8, "h", 0.3, 20_000)]
    if len(taus) == 20_000 and est.restarts == 0:
        assert est.h == pytest.approx(np.mean(taus), rel=1e-9)
    h, err = est
    assert err > 0 and len(est.batch_means) == 10 and est.steps == 20_000


def _orbit_taus(c, m, x, n):
    step = get_step(m)
    out = []
    for _ in range(n):
        s = step(c, x)
        out.append(s)
        x = s.image
    return out


def test_entropy_ratios_small_n(ctx8):
    hr = entropy_estimate(ctx8, "r", 0.3, 200_000).h
    hk = entropy_estimate(ctx8, "k", 0.3, 200_000).h
    hv = entropy_estimate(ctx8, "v", 0.3, 200_000).h
    assert hr / hk == pytest.approx(2.0, abs=0.05)
    cv, cr = area_closed_form(ctx8, "omega_v"), area_closed_form(ctx8, "omega_r")
    assert hv * cv == pytest.approx(hr * cr, rel=0.03)


def test_entropy_restart_accounting(ctx8):
    # the orbit of the left endpoint reaches 0 after n-1 steps
    x0 = -ctx8.lam / 2
    with pytest.raises(OrbitTerminated):
        entropy_estimate(ctx8, "h", x0, 10_000, restart=False)
    est = entropy_estimate(ctx8, "h", x0, 10_000)
    assert est.restarts >= 1 and est.steps == 10_000


def test_entropy_reproducible(ctx8):
    a = entropy_estimate(ctx8, "v", 0.2, 50_000, seed=3)
    b = entropy_estimate(ctx8, "v", 0.2, 50_000, seed=3)
    assert a.h == b.h and a.stderr == b.stderr


# -- planar steps and returns -----------------------------------------------

@pytest.mark.parametrize("m", ["h", "r", "v"])
def test_delta_step_matches_planar_apply(ctx8, m):
    rng = np.random.default_rng(9)
    for x, y in rng.uniform([-0.4, -0.5], [0.4, 0.5], (200, 2)):
        s = get_step(m)(ctx8, x)
        if s.tau > 10:
            continue
        a = planar_step_delta(ctx8, m, (x, y))
        b = planar_apply(s.matrix, (x, y))
        assert a[0] == pytest.approx(b.x, abs=1e-9)
        assert a[1] == pytest.approx(b.y, rel=1e-7, abs=1e-7)


def test_delta_step_on_axis(ctx8):
    s = get_step("r")(ctx8, 0.3)
    x, y = planar_step_delta(ctx8, "r", (0.3, 0.0))
    assert x == s.image
    assert y == pytest.approx(planar_apply(s.matrix, (0.3, 0.0)).y, rel=1e-9)


def test_induction_index_example(ctx8):
    """Points over [R.mu/2, alpha) go straight back into the intersection domain under v."""
    c = ctx8
    dom = build_domain(c, "omega_bar")
    lo = act(c.R, c.mu / 2)
    assert -c.mu / 2 < lo < c.alpha
    pts = sample_fiber(dom, lo, c.alpha, 50, np.random.default_rng(1))
    found = 0
    for p in pts:
        if contains(dom, p) != Membership.INSIDE:
            continue
        assert induction_index(c, "v", p) == 1
        found += 1
    assert found > 10


def test_induction_index_rejects_outside(ctx8):
    with pytest.raises(ParameterError):
        induction_index(ctx8, "v", (0.1, 100.0))


def test_first_return_no_return(ctx8):
    dom = build_domain(ctx8, "omega_bar")
    p = random_starts(ctx8, 1, 0)[0]
    with pytest.raises(NoReturn):
        first_return(ctx8, "r", p, dom, max_iters=0)


# -- comparison -------------------------------------------------------------

@pytest.mark.parametrize("q", [8, 12])
def test_first_returns_agree(q):
    c = make_context(q)
    rep = compare_first_returns(c, random_starts(c, 300, 5), seed=5)
    assert rep.agreement_rate == 1.0
    assert rep.beta == c.alpha
    assert all(r.r_count >= 1 and r.v_count >= 1 for r in rep.records)


def test_float_disagreements_are_refined(ctx8):
    starts = random_starts(ctx8, 1000, 20240229)
    raw = compare_first_returns(ctx8, starts, refine=False)
    ref = compare_first_returns(ctx8, starts)
    assert ref.agreement_rate == 1.0
    assert sum(r.refined for r in ref.records) == len(raw.disagreements)
    for r in raw.disagreements:
        assert r.r_point is not None and r.v_point is not None


def test_compare_rejects_outside(ctx8):
    with pytest.raises(ParameterError):
        compare_first_returns(ctx8, [(0.1, 100.0)])


def test_comparison_csv():
    rec = [ComparisonRecord((0.1, 0.2), (0.3, 0.4), 2, (0.3, 0.4), 3, True),
           ComparisonRecord((0.5, 0.6), None, None, (0.7, 0.8), 1, False, "r: NoReturn", True)]
    text = ComparisonReport(8, rec).to_csv()
    lines = text.splitlines()
    assert lines[0] == "start_x,start_y,r_x,r_y,r_count,v_x,v_y,v_count,agree,refined,note"
    assert lines[1] == "0.10000000000000001,0.20000000000000001,0.29999999999999999,0.40000000000000002,2,0.29999999999999999,0.40000000000000002,3,1,0,"
    assert lines[2].split(",")[2:5] == ["", "", ""]
    assert lines[2].endswith(",0,1,r: NoReturn")
    assert ComparisonReport(8, rec).agreement_rate == 0.5


def test_random_starts_inside(ctx8):
    dom = build_domain(ctx8, "omega_bar")
    pts = random_starts(ctx8, 200, 1)
    assert all(contains(dom, p) == Membership.INSIDE for p in pts)
    assert np.array_equal(pts, random_starts(ctx8, 200, 1))


# -- extended precision -----------------------------------------------------

@pytest.mark.parametrize("m", ["r", "v"])
def test_precise_steps_match_float(ctx8, m):
    pc = precise.precise_context(8)
    rng = np.random.default_rng(3)
    with mp.workdps(precise.DPS):
        for x in rng.uniform(-ctx8.mu / 2 + 1e-3, ctx8.mu / 2 - 1e-3, 300):
            s = get_step(m)(ctx8, x)
            if s.tau > 12:
                continue
            M, img = precise.STEPS[m](pc, mp.mpf(x))
            assert float(img) == pytest.approx(s.image, abs=1e-9)
            Mf = np.array([float(v) for v in M])
            Mf /= math.copysign(1.0, Mf[2] if abs(Mf[2]) > 1e-12 else Mf[3])
            assert Mf == pytest.approx([s.matrix.a, s.matrix.b, s.matrix.c, s.matrix.d], rel=1e-9, abs=1e-9)


def test_precise_context_constants():
    pc = precise.precise_context(8)
    c = make_context(8)
    assert float(pc.mu) == pytest.approx(c.mu, rel=1e-15)
    assert float(pc.alpha) == pytest.approx(c.alpha, rel=1e-15)
    assert float(pc.parc) == pytest.approx(c.parabolic_c, rel=1e-15)


# -- slow returns -----------------------------------------------------------

@pytest.mark.parametrize("q", [8, 16])
def test_slow_return(q):
    rows = slow_return_experiment(make_context(q), 5, samples=60)
    assert [r.k for r in rows] == [2, 3, 4, 5]
    assert all(r.passed and r.sampled > 0 for r in rows)
    # the intervals shrink towards the parabolic point
    widths = [r.x_hi - r.x_lo for r in rows]
    assert all(a > b for a, b in zip(widths, widths[1:]))


def test_slow_return_interval_nested(ctx8):
    ivs = [slow_return_interval(ctx8, k) for k in range(1, 6)]
    for (a0, a1), (b0, b1) in zip(ivs, ivs[1:]):
        assert a0 - 1e-12 <= b0 < b1 <= a1 + 1e-12


def test_slow_return_parameters():
    with pytest.raises(ParameterError):
        slow_return_experiment(make_context(10), 3)
    with pytest.raises(ParameterError):
        slow_return_interval(make_context(10), 2)
    with pytest.raises(ParameterError):
        slow_return_experiment(make_context(8), 1)
