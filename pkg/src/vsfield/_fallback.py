"""Pure numpy implementations of the hot kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature.  All array arguments are C-contiguous float64; the lattice
routines expect the field already centred by its own mean.
"""
from itertools import product

import numpy as np
from scipy.signal import lfilter

__all__ = ["lrv", "psum_moments", "sheet_u", "ar_filter_2d"]


def _lag_slices(n: int, j: int) -> tuple[slice, slice]:
    # pairs (k, k + j) with both ends inside 0..n-1
    if j >= 0:
        return slice(0, n - j), slice(j, n)
    return slice(-j, n), slice(0, n + j)


def lrv(xc: np.ndarray, q: int, signed: bool = False) -> float:
    """Bartlett-weighted sum of empirical covariances over lags ``|j_i| < q``.

    ``signed=True`` uses the ordinary cross-lag covariance.  With
    ``signed=False`` the covariance at lag ``j`` is evaluated at
    ``(|j_1|, ..., |j_d|)``; each folded lag then stands for ``2**(#nonzero)``
    members of the lag box.
    """
    dims = xc.shape
    size = xc.size
    total = 0.0
    if not signed:
        for m in product(range(q), repeat=xc.ndim):
            a = tuple(slice(0, n - mi) for n, mi in zip(dims, m))
            b = tuple(slice(mi, n) for n, mi in zip(dims, m))
            weight = 1.0
            for mi in m:
                weight *= (1.0 - mi / q) * (2.0 if mi else 1.0)
            total += weight * float(np.sum(xc[a] * xc[b]))
        return total / size
    for j in product(range(-(q - 1), q), repeat=xc.ndim):
        pairs = [_lag_slices(n, ji) for n, ji in zip(dims, j)]
        a = tuple(p[0] for p in pairs)
        b = tuple(p[1] for p in pairs)
        weight = 1.0
        for ji in j:
            weight *= 1.0 - abs(ji) / q
        total += weight * float(np.sum(xc[a] * xc[b]))
    return total / size


def psum_moments(xc: np.ndarray) -> tuple[float, float]:
    """Sum and sum of squares of all rectangle partial sums of ``xc``."""
    s = np.array(xc, dtype=np.float64)
    for axis in range(s.ndim):
        np.cumsum(s, axis=axis, out=s)
    return float(s.sum()), float(np.sum(s * s))


def sheet_u(noise: np.ndarray) -> float:
    """One realization of the null functional from a cube of white noise.

    The Brownian sheet at lattice point ``k`` is ``g**(-d/2)`` times the prefix
    sum of ``noise``; the two integrals are right-endpoint Riemann sums.
    """
    g = noise.shape[0]
    d = noise.ndim
    sheet = np.array(noise, dtype=np.float64)
    for axis in range(d):
        np.cumsum(sheet, axis=axis, out=sheet)
    sheet *= g ** (-d / 2.0)
    b1 = sheet[(-1,) * d]
    t = np.arange(1, g + 1) / g
    tprod = t
    for _ in range(d - 1):
        tprod = np.multiply.outer(tprod, t)
    dev = sheet - tprod * b1
    m1 = dev.mean()
    return float(np.mean(dev * dev) - m1 * m1)


def ar_filter_2d(eps: np.ndarray, a: float) -> np.ndarray:
    """Solve ``(1 - a L1)(1 - a L2) X = eps`` with zero values outside the grid.

    The separable operator factors into two first-order recursions, one per
    axis, each started from zero.
    """
    coeffs = ([1.0], [1.0, -a])
    out = lfilter(*coeffs, eps, axis=0)
    return np.ascontiguousarray(lfilter(*coeffs, out, axis=1))
