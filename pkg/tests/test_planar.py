import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cfx.domains import Membership, build_domain, classify
from cfx.errors import ParameterError, PoleError
from cfx.maps import orbit, rosen_original_step
from cfx.moebius import INF, MoebiusMap, act, make_context
from cfx.planar import (
    PlanarPoint,
    delta_of,
    from_transversal,
    geodesic_flow,
    planar_apply,
    planar_apply_many,
    planar_orbit,
    planar_step,
    to_transversal,
    transport_delta,
)

CTX8 = make_context(8)


def generator_words(c, count=20, seed=0):
    gens = [c.S, c.S.inverse(), c.T, c.U, c.U.inverse(), c.P, c.R]
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        M = MoebiusMap(1.0, 0.0, 0.0, 1.0)
        for i in rng.integers(0, len(gens), rng.integers(1, 5)):
            M = M @ gens[i]
        out.append(M)
    return out


def test_examples(ctx8):
    assert planar_apply(ctx8.T, (2.0, 0.0)) == (-0.5, -2.0)
    p = planar_apply(ctx8.S, (0.3, 0.7))
    assert p.x == pytest.approx(0.3 + ctx8.lam) and p.y == 0.7
    with pytest.raises(PoleError):
        planar_apply(ctx8.T, (0.0, 1.0))
    with pytest.raises(ParameterError):
        planar_apply(rosen_original_step(ctx8, 0.3).matrix, (0.3, 0.0))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_round_trip(x, y):
    for M in generator_words(CTX8, 5):
        if abs(M.c * x + M.d) < 1e-3:
            continue
        p = planar_apply(M, (x, y))
        back = planar_apply(M.inverse(), p)
        assert back.x == pytest.approx(x, abs=1e-7) and back.y == pytest.approx(y, abs=1e-7)


def test_cocycle(ctx8):
    words = generator_words(ctx8, 10, seed=1)
    rng = np.random.default_rng(2)
    for M, N in zip(words, words[1:]):
        for x, y in rng.uniform(-2, 2, (20, 2)):
            w1 = N.c * x + N.d
            if abs(w1) < 1e-3:
                continue
            q = planar_apply(N, (x, y))
            if abs(M.c * q.x + M.d) < 1e-3:
                continue
            a = planar_apply(M @ N, (x, y))
            b = planar_apply(M, q)
            assert a.x == pytest.approx(b.x, rel=1e-8, abs=1e-8)
            assert a.y == pytest.approx(b.y, rel=1e-8, abs=1e-8)


def test_transport_delta(ctx8):
    c = ctx8
    assert transport_delta(c.T, INF) == 0.0
    for x in (0.3, -1.2, 2.5):
        assert planar_apply(c.T, (x, 0.0)).y == pytest.approx(1 / (act(c.T, x) - 0.0))
    rng = np.random.default_rng(3)
    for j in (1, 2, 3):
        M = c.S_pow(-j) @ c.T
        d2 = transport_delta(M, -1.0)
        for x in rng.uniform(-0.9, 0.9, 100):
            if abs(x + 1) < 1e-3 or abs(x) < 1e-3:
                continue
            y = planar_apply(M, (x, 1 / (x + 1))).y
            assert y == pytest.approx(1 / (act(M, x) - d2), rel=1e-8)
    # P R^-1 carries the lower pole -mu/2 of the cylinder to gamma
    assert transport_delta(c.P @ c.R.inverse(), -c.mu / 2) == pytest.approx(c.gamma, rel=1e-12)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_transport_equivariant(x, d):
    for M in generator_words(CTX8, 5, seed=4):
        t = transport_delta(M, d)
        a = act(M, d)
        assert (t is INF and a is INF) or t == a


def test_transversal(ctx8):
    assert to_transversal((0.0, 0.0)) == ctx8.T
    p = (0.37, -1.4)
    assert from_transversal(to_transversal(p)) == pytest.approx(p)
    M = ctx8.S_pow(-2) @ ctx8.T
    for x, y in np.random.default_rng(5).uniform(0.05, 0.9, (50, 2)):
        w = M.c * x + M.d
        assert w > 0
        t0 = -2 * math.log(w)
        A = M.as_array() @ to_transversal((x, y)).as_array() @ geodesic_flow(t0)
        q = from_transversal(MoebiusMap.from_array(A))
        assert q == pytest.approx(planar_apply(M, (x, y)), rel=1e-10)


def jacobian_det(M, x, y):
    # central differences with the step scaled to the distance from the pole
    h = 1e-4 * min(1.0, abs(M.c * x + M.d))

    def f(u, v):
        return np.array(planar_apply(M, (u, v)))

    dx = (f(x + h, y) - f(x - h, y)) / (2 * h)
    dy = (f(x, y + h) - f(x, y - h)) / (2 * h)
    return dx[0] * dy[1] - dx[1] * dy[0]


def test_jacobian_is_one(ctx8):
    rng = np.random.default_rng(6)
    pts = rng.uniform(-2, 2, (100, 2))
    for M in generator_words(ctx8, 20, seed=7):
        for x, y in pts:
            assert jacobian_det(M, x, y) == pytest.approx(1.0, rel=1e-5)


def test_vectorised_matches_scalar(ctx8):
    words = generator_words(ctx8, 8, seed=8)
    mats = np.array([[M.a, M.b, M.c, M.d] for M in words])
    xs = np.linspace(-1, 1, 8) + 0.013
    ys = np.linspace(2, -2, 8)
    X, Y = planar_apply_many(mats, xs, ys)
    for i, M in enumerate(words):
        p = planar_apply(M, (xs[i], ys[i]))
        assert X[i] == pytest.approx(p.x) and Y[i] == pytest.approx(p.y)


def test_delta_of():
    assert delta_of((1.0, 0.0)) is INF
    assert delta_of((1.0, 0.5)) == -1.0


def test_planar_orbit_projects_to_interval_orbit(ctx8):
    po = planar_orbit(ctx8, "h", (math.pi / 10, 0.0), 200)
    assert len(po) == 201
    # stepwise: the orbit is chaotic, so compare one step at a time
    for p, q in zip(po.points, po.points[1:]):
        assert q.x == pytest.approx(orbit(ctx8, "h", p.x, 1).steps[0].image, abs=1e-9)
    io = orbit(ctx8, "h", math.pi / 10, 5)
    assert [p.x for p in po.points[:6]] == pytest.approx(io.points[:6], abs=1e-9)
    assert po.points[0] == PlanarPoint(math.pi / 10, 0.0)
    assert planar_step(ctx8, "h", po.points[0]) == po.points[1]
    with pytest.raises(ParameterError):
        planar_orbit(ctx8, "f", (0.3, 0.0), 5)


@pytest.mark.parametrize("q", [8, 12])
def test_v_orbit_enters_omega_v(q):
    c = make_context(q)
    d = build_domain(c, "omega_v")
    po = planar_orbit(c, "v", (0.1234, 0.0), 3000)
    pts = po.as_array()[10:]
    assert len(pts) > 1000
    m = classify(d, pts[:, 0], pts[:, 1], tol=1e-7)
    assert np.all(m != Membership.OUTSIDE)
