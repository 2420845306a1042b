import importlib.util
import os
import subprocess
import sys

import numpy as np
import pytest

from cfx import kernels
from cfx.errors import ParameterError
from cfx.maps import map_interval

needs_c = pytest.mark.skipif(kernels._ckernels is None, reason="compiled kernels not built")
MAPS = ["h", "k", "r", "a", "v"]


@needs_c
@pytest.mark.parametrize("m", MAPS)
def test_step_many_backends_agree(ctx8, m):
    lo, hi = map_interval(ctx8, m)
    xs = np.random.default_rng(1).uniform(lo, hi, 5000)
    xs = np.concatenate([xs, [0.0, lo, hi, ctx8.alpha, hi + 0.1]])
    mc, ic, tc, sc = kernels.step_many(ctx8, m, xs, backend="cython")
    mp_, ip, tp, sp = kernels.step_many(ctx8, m, xs, backend="python")
    assert np.array_equal(sc, sp)
    ok = sc == 0
    assert np.allclose(mc[ok], mp_[ok], rtol=1e-12, atol=1e-12)
    assert np.allclose(ic[ok], ip[ok], rtol=1e-12, atol=1e-12)
    assert np.allclose(tc[ok], tp[ok], rtol=1e-10, atol=1e-12)
    assert np.all(np.isnan(ic[~ok]))


@needs_c
@pytest.mark.parametrize("m", MAPS)
def test_birkhoff_backends_agree(ctx8, m):
    # short orbits: chaos separates the two after a few dozen steps otherwise
    for x0 in (0.123, -0.271, 0.05):
        c = kernels.birkhoff(ctx8, m, x0, 20, 4, backend="cython")
        p = kernels.birkhoff(ctx8, m, x0, 20, 4, backend="python")
        assert np.allclose(c[0], p[0], rtol=1e-8)
        assert np.array_equal(c[1], p[1]) and c[2:4] == p[2:4]


@needs_c
def test_planar_orbit_backends_agree(ctx8):
    xc, yc, sc = kernels.planar_orbit(ctx8, "h", 0.3141592653589793, 0.0, 25, backend="cython")
    xp, yp, sp = kernels.planar_orbit(ctx8, "h", 0.3141592653589793, 0.0, 25, backend="python")
    assert sc == sp and len(xc) == len(xp) == 26
    assert np.allclose(xc, xp, atol=1e-7) and np.allclose(yc, yp, atol=1e-6)


def test_birkhoff_resumes(ctx8):
    whole = kernels.birkhoff(ctx8, "v", 0.2345, 1000, 10)
    first = kernels.birkhoff(ctx8, "v", 0.2345, 500, 10)
    assert first[2] == 500
    # resuming from the last point fills the later batches of the full run
    rest = kernels.birkhoff(ctx8, "v", first[4], 1000, 10, start=500)
    assert np.array_equal(rest[1], [0] * 5 + [100] * 5)
    assert np.allclose(rest[0][5:], whole[0][5:])
    assert first[0].sum() == pytest.approx(whole[0][:5].sum())


def test_status_reported(ctx8):
    _, _, done, status, _ = kernels.birkhoff(ctx8, "h", -ctx8.lam / 2, 100, 1)
    assert done == ctx8.n - 1 or kernels.STATUS_NAMES[status] == "zero/pole"
    assert kernels.STATUS_NAMES[status] == "zero/pole"


def test_bad_backend_and_map(ctx8):
    with pytest.raises(ParameterError):
        kernels.step_many(ctx8, "v", [0.1], backend="fortran")
    with pytest.raises(ParameterError):
        kernels.step_many(ctx8, "f", [0.1])


def test_pure_python_switch():
    env = dict(os.environ, CFX_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from cfx import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env["CFX_PURE_PYTHON"] = "0"
    out = subprocess.run([sys.executable, "-c", "from cfx import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    built = importlib.util.find_spec("cfx._ckernels") is not None
    assert out.stdout.strip() == ("cython" if built else "python")


def test_benchmark_runs(capsys):
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    bench.main(["--scale", "0.001", "--repeat", "1", "--pyfrac", "2"])
    out = capsys.readouterr().out
    assert "birkhoff v" in out and "planar_orbit h" in out
