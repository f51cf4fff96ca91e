"""The V/S statistic for lattice fields and its ingredients.

For a field ``X`` on ``A_n = {1..n_1} x ... x {1..n_d}`` with ``N = prod(n_i)``
points, the centred partial sums are ``S*_j = sum_{i <= j} (X_i - mean(X))`` and

    M_n = N**-2 * (sum_j S*_j**2 - (sum_j S*_j)**2 / N) / s_hat_sq

where ``s_hat_sq`` is the Bartlett-weighted long-run variance estimate with
bandwidth ``q``.  For square fields ``N = n**d`` and this is the usual form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from . import _backend
from .exceptions import DegenerateFieldError, LagOutOfRangeError
from .field import Field

__all__ = [
    "VsConfig",
    "VsResult",
    "default_q",
    "empirical_cov",
    "bartlett_weight",
    "long_run_variance",
    "vs_statistic",
    "vs_statistic_bruteforce",
]

# s_hat_sq at or below this fraction of r_hat(0) is treated as zero.
DEGENERATE_RTOL = 1e-14
BRUTEFORCE_MAX_POINTS = 10_000


def default_q(n: int) -> int:
    """Bandwidth used when the caller gives none.

    Returns the calibrated values 30 at ``n=128`` and 40 at ``n=256``; other
    sizes use the interpolating heuristic ``round(30 * (n/128)**0.4)``,
    clipped to ``[1, n]``.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    return int(min(max(round(30.0 * (n / 128.0) ** 0.4), 1), n))


@dataclass(frozen=True)
class VsConfig:
    """Bandwidth and lag convention for the long-run variance estimate."""

    q: int
    signed_lags: bool = True

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 1:
            raise ValueError(f"bandwidth q must be a positive integer, got {self.q}")

    def check(self, dims: Sequence[int]) -> None:
        if self.q > min(dims):
            raise ValueError(f"bandwidth q={self.q} exceeds the smallest side {min(dims)}")

    @classmethod
    def for_dims(cls, dims: Sequence[int], q: int | None = None, **kw) -> "VsConfig":
        return cls(default_q(min(dims)) if q is None else q, **kw)


@dataclass(frozen=True)
class VsResult:
    m_n: float
    s_hat_sq: float
    sum_sq_partial: float
    sum_partial: float
    n_dims: tuple[int, ...]
    q: int


def _values(field) -> np.ndarray:
    return field.values if isinstance(field, Field) else Field(field).values


def _centered(x: np.ndarray) -> np.ndarray:
    # the second pass removes the rounding left in the mean when |mean| >> sd
    y = x - x.mean()
    y -= y.mean()
    return np.ascontiguousarray(y)


def empirical_cov(field: Field, lag: Sequence[int] | int) -> float:
    """Empirical covariance at ``(|j_1|, ..., |j_d|)``, normalised by ``N``."""
    x = _values(field)
    lag = (lag,) if np.isscalar(lag) else tuple(lag)
    if len(lag) != x.ndim:
        raise LagOutOfRangeError(f"lag {lag} has {len(lag)} components, field has {x.ndim}")
    m = tuple(abs(int(j)) for j in lag)
    if any(mi >= n for mi, n in zip(m, x.shape)):
        raise LagOutOfRangeError(f"lag {lag} out of range for dims {x.shape}")
    xc = x - x.mean()
    a = tuple(slice(0, n - mi) for n, mi in zip(x.shape, m))
    b = tuple(slice(mi, n) for n, mi in zip(x.shape, m))
    return float(np.sum(xc[a] * xc[b]) / x.size)


def bartlett_weight(q: int, lag: Sequence[int] | int) -> float:
    lag = (lag,) if np.isscalar(lag) else tuple(lag)
    if q < 1:
        raise ValueError("q must be positive")
    w = 1.0
    for j in lag:
        if abs(j) > q - 1:
            raise LagOutOfRangeError(f"lag {tuple(lag)} outside the box |j_i| <= {q - 1}")
        w *= 1.0 - abs(j) / q
    return w


def long_run_variance(field: Field, q: int, signed_lags: bool = True) -> float:
    """Bartlett estimate of the sum of covariances over all lags.

    By default each lag of the box ``|j_i| < q`` enters with its ordinary
    cross-lag covariance, which makes the estimate a Fejer-smoothed periodogram
    and hence non-negative.  ``signed_lags=False`` instead evaluates every lag
    at ``(|j_1|, ..., |j_d|)`` (see :func:`empirical_cov`).  In ``d >= 2`` that
    variant is not positive semi-definite: fields oscillating along
    anti-diagonals, such as one-direction long memory with ``k = -1``, can
    drive it to zero or below.

    Raises
    ------
    DegenerateFieldError
        If the field is constant.
    """
    x = _values(field)
    VsConfig(q).check(x.shape)
    xc = _centered(x)
    if not np.any(xc):
        raise DegenerateFieldError("constant field: the long-run variance is zero")
    return float(_backend.kernels.lrv(xc, int(q), bool(signed_lags)))


def _finish(sum_sq: float, total: float, s_hat_sq: float, r0: float, dims, q) -> VsResult:
    if not s_hat_sq > DEGENERATE_RTOL * r0:
        raise DegenerateFieldError(
            f"long-run variance estimate {s_hat_sq:.3g} is not positive (r_hat(0)={r0:.3g})"
        )
    size = float(np.prod(dims))
    # accumulate first, normalise after: the raw sums carry the magnitude
    spread = sum_sq - total * total / size
    m_n = max(spread, 0.0) / size / size / s_hat_sq
    return VsResult(m_n, s_hat_sq, sum_sq, total, tuple(dims), int(q))


def vs_statistic(field: Field, cfg: VsConfig | int | None = None) -> VsResult:
    """Compute M_n via prefix sums in ``O(N)`` plus ``O(q**d N)`` for ``s_hat_sq``.

    ``cfg`` may be a :class:`VsConfig`, a bare bandwidth, or ``None`` for
    :func:`default_q`.
    """
    x = _values(field)
    if cfg is None or isinstance(cfg, (int, np.integer)):
        cfg = VsConfig.for_dims(x.shape, None if cfg is None else int(cfg))
    cfg.check(x.shape)
    xc = _centered(x)
    r0 = float(np.dot(xc.ravel(), xc.ravel()) / xc.size)
    if r0 == 0.0:
        raise DegenerateFieldError("constant field: the long-run variance is zero")
    k = _backend.kernels
    total, sum_sq = k.psum_moments(xc)
    s_hat_sq = float(k.lrv(xc, cfg.q, cfg.signed_lags))
    return _finish(sum_sq, total, s_hat_sq, r0, x.shape, cfg.q)


def vs_statistic_bruteforce(field: Field, cfg: VsConfig | int) -> VsResult:
    """Literal evaluation, independent of :func:`vs_statistic`; a test oracle.

    Every partial sum is its own rectangle sum and every lag of the box
    ``{-(q-1)..q-1}^d`` is visited with its signs, so the cost is
    ``O(N**2 + q**d N)``.  Limited to ``N <= 10**4``.
    """
    x = _values(field)
    if isinstance(cfg, (int, np.integer)):
        cfg = VsConfig(int(cfg))
    cfg.check(x.shape)
    if x.size > BRUTEFORCE_MAX_POINTS:
        raise ValueError(f"brute force limited to {BRUTEFORCE_MAX_POINTS} points, got {x.size}")
    dims = x.shape
    size = x.size
    mean = math.fsum(x.ravel()) / size
    dev = x - mean

    partials = []
    for j in product(*(range(1, n + 1) for n in dims)):
        rect = tuple(slice(0, ji) for ji in j)
        partials.append(math.fsum(dev[rect].ravel()))
    sum_partial = math.fsum(partials)
    sum_sq_partial = math.fsum(p * p for p in partials)

    def cov(lag):
        if cfg.signed_lags:
            idx_a, idx_b = [], []
            for n, j in zip(dims, lag):
                ks = [k for k in range(n) if 0 <= k + j < n]
                idx_a.append(ks)
                idx_b.append([k + j for k in ks])
            a = dev[np.ix_(*idx_a)]
            b = dev[np.ix_(*idx_b)]
        else:
            m = [abs(j) for j in lag]
            a = dev[np.ix_(*[range(0, n - mi) for n, mi in zip(dims, m)])]
            b = dev[np.ix_(*[range(mi, n) for n, mi in zip(dims, m)])]
        return math.fsum((a * b).ravel()) / size

    q = cfg.q
    terms = []
    for lag in product(range(-(q - 1), q), repeat=len(dims)):
        w = 1.0
        for j in lag:
            w *= 1.0 - abs(j) / q
        terms.append(w * cov(lag))
    s_hat_sq = math.fsum(terms)
    r0 = cov((0,) * len(dims))
    if r0 == 0.0 or not s_hat_sq > DEGENERATE_RTOL * r0:
        raise DegenerateFieldError(f"long-run variance estimate {s_hat_sq:.3g} is not positive")
    # variance-of-partial-sums form rather than the expanded one used above
    centre = sum_partial / size
    var_partial = math.fsum((p - centre) ** 2 for p in partials) / size
    m_n = var_partial / size / s_hat_sq
    return VsResult(m_n, s_hat_sq, sum_sq_partial, sum_partial, tuple(dims), q)
