import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cfx.errors import ParameterError, PoleError
from cfx.moebius import (
    INF,
    MoebiusMap,
    act,
    is_inf,
    make_context,
    projective_equal,
    relation_residuals,
    tau,
    translation,
)

QS = [6, 8, 10, 12, 16]


def test_q8_constants(ctx8):
    assert ctx8.lam == pytest.approx(1.8477590650, abs=1e-10)
    assert ctx8.mu == pytest.approx(2 * (1 + math.sqrt(2)), abs=1e-12)
    assert ctx8.Q1 == pytest.approx(1 / math.tan(math.pi / 16), abs=1e-12)
    assert ctx8.Q1 == pytest.approx(5.0273395, abs=1e-7)


@pytest.mark.parametrize("q", QS)
def test_relation_suite(q):
    res = relation_residuals(make_context(q))
    bad = {k: v for k, v in res.items() if not v <= 1e-10}
    assert not bad


@pytest.mark.parametrize("q", QS)
def test_context_invariants(q):
    c = make_context(q)
    assert c.alpha * c.gamma == pytest.approx((c.mu / 2) ** 2, rel=1e-14)
    assert c.mu + 1 / c.Q1 == pytest.approx(c.Q1, rel=1e-13)
    assert c.phi[-1] == pytest.approx(0.0, abs=1e-15)
    assert c.delta[0] == pytest.approx(-c.lam - 1)
    assert c.delta[-1] == pytest.approx(-1 / (c.lam - 1), rel=1e-12)
    seq = [c.d[0]]
    for j in range(c.n - 1):
        seq += [c.c[j], c.d[j + 1]]
    assert np.all(np.diff(seq) > 0)
    assert c.rho > 0


@pytest.mark.parametrize("q", [5, 7, 4, 2, 8.5])
def test_bad_q_rejected(q):
    with pytest.raises(ParameterError):
        make_context(q)


def test_act_examples(ctx8):
    assert act(ctx8.T, 2.0) == -0.5
    assert act(ctx8.R, -ctx8.mu / 2) == pytest.approx(ctx8.mu / 2, abs=1e-12)
    assert act(ctx8.S, 0.0) == pytest.approx(ctx8.lam)
    assert act(ctx8.T, 0.0) is INF
    assert act(ctx8.T, INF) == 0.0
    assert is_inf(act(ctx8.S, INF))


def test_tau_examples(ctx8):
    assert tau(ctx8.S, 0.37) == 0.0
    assert tau(ctx8.T, 2.0) == pytest.approx(-2 * math.log(2))
    TS = ctx8.T @ ctx8.S
    assert tau(TS, 0.3) == pytest.approx(tau(ctx8.T, act(ctx8.S, 0.3)) + tau(ctx8.S, 0.3))
    with pytest.raises(PoleError):
        tau(ctx8.T, 0.0)


def test_projective_equal_examples(ctx8):
    c = ctx8
    I = MoebiusMap(1.0, 0.0, 0.0, 1.0)
    assert projective_equal(c.T @ c.T, I, 1e-10)
    assert projective_equal((c.S @ c.T) ** c.q, I, 1e-10)
    assert projective_equal(c.Q @ c.S @ c.Q.inverse(), c.P, 1e-10)
    assert not projective_equal(c.S, c.P, 1e-10)


def test_canonical_sign():
    M = MoebiusMap(-1.0, -2.0, -3.0, -7.0)
    assert M.c > 0 and M.det == pytest.approx(1.0)
    N = MoebiusMap(-1.0, 5.0, 0.0, -1.0)
    assert N.d > 0 and N.b == -5.0


def test_quarter_rotation_is_inversion():
    c = make_context(8)
    xs = np.random.default_rng(0).uniform(-10, 10, 100)
    Rq = c.R_pow(c.q // 4)
    for x in xs:
        assert act(Rq, x) == pytest.approx(-1 / x, rel=1e-12)


def test_parabolic_closed_form(ctx8):
    M = ctx8.P @ ctx8.R.inverse()
    for ell in (1, 2, 7, 40):
        assert projective_equal(ctx8.PRinv_pow(ell), M ** ell, 1e-8 * ell)
        assert projective_equal(ctx8.PinvR_pow(ell), (ctx8.P.inverse() @ ctx8.R) ** ell, 1e-8 * ell)


def _word(ctx, letters):
    gens = {"S": ctx.S, "T": ctx.T, "s": ctx.S.inverse(), "U": ctx.U, "P": ctx.P, "R": ctx.R}
    M = MoebiusMap(1.0, 0.0, 0.0, 1.0)
    for ch in letters:
        M = M @ gens[ch]
    return M


words = st.text(alphabet="STsUPR", min_size=0, max_size=6)
reals = st.floats(-3, 3, allow_nan=False)


@given(words, words, reals)
def test_tau_cocycle(w1, w2, x):
    c = make_context(8)
    M, N = _word(c, w1), _word(c, w2)
    try:
        nx = act(N, x)
        if is_inf(nx) or abs(N.c * x + N.d) < 1e-6 or abs(M.c * nx + M.d) < 1e-6:
            return
        lhs = tau(M @ N, x)
        rhs = tau(M, nx) + tau(N, x)
    except PoleError:
        return
    assert lhs == pytest.approx(rhs, abs=1e-8)


@given(words, words, reals)
def test_act_is_group_action(w1, w2, x):
    c = make_context(8)
    M, N = _word(c, w1), _word(c, w2)
    nx = act(N, x)
    if is_inf(nx) or abs(N.c * x + N.d) < 1e-6:
        return
    den = M.c * nx + M.d
    if abs(den) < 1e-6:
        return
    assert act(M @ N, x) == pytest.approx(act(M, nx), rel=1e-8, abs=1e-8)


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.1, 5))
def test_det_one_after_composition(b, t, s):
    M = translation(b) @ MoebiusMap(s, t, 0.0, 1.0) @ translation(-t)
    assert M.det == pytest.approx(1.0, abs=1e-12)
