"""The compiled kernels and the numpy fallback must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

import vsfield
from vsfield import _backend, _fallback

compiled = _backend.compiled()
needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def _centred(shape, seed):
    x = np.random.default_rng(seed).normal(size=shape)
    return np.ascontiguousarray(x - x.mean())


def test_backend_name_consistent():
    assert vsfield.BACKEND == _backend.NAME
    assert _backend.kernels is (_fallback if _backend.NAME == "python" else compiled)


def test_forced_fallback_in_fresh_interpreter():
    env = dict(os.environ, VSFIELD_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", "import vsfield; print(vsfield.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


@needs_ext
@pytest.mark.parametrize("shape", [(1,), (7,), (40,), (3, 3), (9, 14), (32, 32)])
@pytest.mark.parametrize("signed", [True, False])
def test_lrv(shape, signed):
    xc = _centred(shape, 1)
    for q in sorted({1, 2, min(shape) // 2 or 1, min(shape)}):
        a = compiled.lrv(xc, q, signed)
        b = _fallback.lrv(xc, q, signed)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-14)


@needs_ext
def test_lrv_higher_dimension_delegates():
    xc = _centred((4, 5, 3), 2)
    for signed in (True, False):
        assert compiled.lrv(xc, 2, signed) == pytest.approx(_fallback.lrv(xc, 2, signed), rel=1e-12)


@needs_ext
@pytest.mark.parametrize("shape", [(1,), (50,), (1, 1), (6, 9), (64, 64), (3, 4, 5)])
def test_psum_moments(shape):
    xc = _centred(shape, 3)
    a = compiled.psum_moments(xc)
    b = _fallback.psum_moments(xc)
    scale = max(1.0, abs(b[1]))
    assert a[0] == pytest.approx(b[0], abs=1e-10 * scale)
    assert a[1] == pytest.approx(b[1], rel=1e-12)


@needs_ext
@pytest.mark.parametrize("shape", [(2,), (500,), (2, 2), (37, 37), (200, 200), (6, 6, 6)])
def test_sheet_u(shape):
    noise = np.random.default_rng(4).normal(size=shape)
    assert compiled.sheet_u(noise) == pytest.approx(_fallback.sheet_u(noise), rel=1e-10, abs=1e-14)


@needs_ext
@pytest.mark.parametrize("a", [1e-12, 0.3, 0.5, 0.8, 0.99])
def test_ar_filter(a):
    eps = np.random.default_rng(5).normal(size=(60, 45))
    np.testing.assert_allclose(compiled.ar_filter_2d(eps, a), _fallback.ar_filter_2d(eps, a), rtol=1e-10, atol=1e-12)


@needs_ext
def test_statistic_identical_across_backends(monkeypatch):
    f = vsfield.simulate("ar:a=0.5", 64, vsfield.RngSpec(6))
    got = vsfield.vs_statistic(f, 10)
    monkeypatch.setattr(_backend, "kernels", _fallback)
    ref = vsfield.vs_statistic(f, 10)
    assert got.m_n == pytest.approx(ref.m_n, rel=1e-12)
    assert got.s_hat_sq == pytest.approx(ref.s_hat_sq, rel=1e-12)
