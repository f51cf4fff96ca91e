"""Short- and long-memory field generators on the square lattice.

Short memory: white noise and the separable autoregression
``(1 - a L1)(1 - a L2) X = eps``.

Long memory: Gaussian fields from the spectral (random cosine) method with
spectral density, on all of ``[-pi, pi]^2``,

* product type  ``|x1|**a1 * |x2|**a2``       (``-1 < a1, a2 < 0``)
* isotropic     ``(x1**2 + x2**2)**(a / 2)``   (``-2 < a < 0``)
* one direction ``|x1 + k x2|**a``             (``-1 < a < 0``, integer ``k``)

A field is ``X[i, j] = sqrt(2 c / N) * sum_k cos(Z1_k i + Z2_k j + 2 pi U_k)``
with ``Z_k`` drawn from the normalised density, ``U_k`` uniform and ``c`` the
total spectral mass, so ``Var X = c`` and ``Cov(X_0, X_h) = int cos(h.x) f(x) dx``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate

from . import _backend
from .exceptions import ModelSpecError
from .field import Field, RngLike, as_generator, gaussian_noise_field

__all__ = [
    "WhiteNoise",
    "SeparableAR",
    "ProductLM",
    "IsotropicLM",
    "OneDirectionLM",
    "ModelSpec",
    "SpectralSample",
    "parse_model",
    "gamma_of",
    "spectral_density",
    "sample_spectral_point",
    "draw_spectral_sample",
    "simulate_ar",
    "simulate_spectral",
    "simulate",
]

DEFAULT_N_WAVES = 5000
DEFAULT_BURN_IN = 100
MAX_PROPOSALS = 10_000  # per accepted point, for the rejection samplers
TWO_PI = 2.0 * math.pi


def _num(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class WhiteNoise:
    long_memory = False

    @property
    def gamma(self):
        return None

    def spec_string(self) -> str:
        return "white"


@dataclass(frozen=True)
class SeparableAR:
    a: float
    long_memory = False

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ModelSpecError(f"AR coefficient a={self.a} must lie in (0, 1)")

    @property
    def gamma(self):
        return None

    def spec_string(self) -> str:
        return f"ar:a={_num(self.a)}"


@dataclass(frozen=True)
class ProductLM:
    a1: float
    a2: float
    long_memory = True

    def __post_init__(self):
        for name, a in (("a1", self.a1), ("a2", self.a2)):
            if not -1.0 < a < 0.0:
                raise ModelSpecError(f"product model needs -1 < {name} < 0, got {a}")

    @property
    def gamma(self) -> float:
        return 1.0 - (self.a1 + self.a2) / 2.0

    def spec_string(self) -> str:
        return f"product:a1={_num(self.a1)},a2={_num(self.a2)}"

    def density(self, x1, x2):
        return np.abs(x1) ** self.a1 * np.abs(x2) ** self.a2

    def total_mass(self) -> float:
        return math.prod(2.0 * math.pi ** (a + 1.0) / (a + 1.0) for a in (self.a1, self.a2))

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        # |x| has CDF (|x| / pi)**(a + 1) on [0, pi]; sign is a fair coin
        v = 2.0 * gen.random((size, 2)) - 1.0
        expo = 1.0 / (np.array([self.a1, self.a2]) + 1.0)
        return np.sign(v) * math.pi * np.abs(v) ** expo


@dataclass(frozen=True)
class IsotropicLM:
    alpha: float
    long_memory = True

    def __post_init__(self):
        if not -2.0 < self.alpha < 0.0:
            raise ModelSpecError(f"isotropic model needs -2 < a < 0, got {self.alpha}")

    @property
    def gamma(self) -> float:
        return 1.0 - self.alpha / 2.0

    def spec_string(self) -> str:
        return f"iso:a={_num(self.alpha)}"

    def density(self, x1, x2):
        return (np.asarray(x1) ** 2 + np.asarray(x2) ** 2) ** (self.alpha / 2.0)

    def total_mass(self) -> float:
        # eight copies of the triangle 0 <= x2 <= x1 <= pi, in polar coordinates
        p = self.alpha + 2.0
        val, _ = integrate.quad(
            lambda th: (math.pi / math.cos(th)) ** p / p, 0.0, math.pi / 4.0, epsabs=0.0, epsrel=1e-12
        )
        return 8.0 * val

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        # polar proposal on the disc of radius pi*sqrt(2), radial density ~ r**(alpha+1)
        rmax = math.pi * math.sqrt(2.0)
        p = self.alpha + 2.0

        def propose(m):
            r = rmax * gen.random(m) ** (1.0 / p)
            th = TWO_PI * gen.random(m)
            return np.column_stack((r * np.cos(th), r * np.sin(th)))

        def accept(pts):
            return np.all(np.abs(pts) <= math.pi, axis=1)

        return _rejection(propose, accept, size)


@dataclass(frozen=True)
class OneDirectionLM:
    alpha: float
    k: int
    long_memory = True

    def __post_init__(self):
        if not -1.0 < self.alpha < 0.0:
            raise ModelSpecError(f"one-direction model needs -1 < a < 0, got {self.alpha}")
        if int(self.k) != self.k:
            raise ModelSpecError(f"one-direction model needs an integer k, got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    @property
    def gamma(self) -> float:
        return 1.0 - self.alpha / 2.0

    def spec_string(self) -> str:
        return f"oneline:a={_num(self.alpha)},k={self.k}"

    def density(self, x1, x2):
        return np.abs(np.asarray(x1) + self.k * np.asarray(x2)) ** self.alpha

    # u -> sign(u) |u|**b / b is an antiderivative of |u|**alpha (b = alpha + 1)
    def _g(self, u):
        b = self.alpha + 1.0
        return np.sign(u) * np.abs(u) ** b / b

    def _g_inv(self, v):
        b = self.alpha + 1.0
        return np.sign(v) * (b * np.abs(v)) ** (1.0 / b)

    def _h(self, u):
        b = self.alpha + 1.0
        return np.abs(u) ** (b + 1.0) / (b * (b + 1.0))

    def line_mass(self, x2):
        """``int_{-pi}^{pi} f(x1, x2) dx1``, the unnormalised marginal of ``x2``."""
        s = self.k * np.asarray(x2, dtype=np.float64)
        return self._g(math.pi + s) - self._g(-math.pi + s)

    def total_mass(self) -> float:
        b = self.alpha + 1.0
        if self.k == 0:
            return TWO_PI * 2.0 * math.pi**b / b
        k = self.k
        return float(2.0 * (self._h(math.pi * (1 + k)) - self._h(math.pi * (1 - k))) / k)

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        # x2 from its marginal by rejection against the uniform (the marginal
        # peaks at x2 = 0), then x1 given x2 by inverting the antiderivative
        peak = float(self.line_mass(0.0))

        def propose(m):
            x2 = math.pi * (2.0 * gen.random(m) - 1.0)
            keep = gen.random(m) * peak <= self.line_mass(x2)
            return x2, keep

        x2 = _rejection_1d(propose, size)
        s = self.k * x2
        lo, hi = self._g(-math.pi + s), self._g(math.pi + s)
        u = self._g_inv(lo + gen.random(size) * (hi - lo))
        x1 = np.clip(u - s, -math.pi, math.pi)
        return np.column_stack((x1, x2))


ModelSpec = Union[WhiteNoise, SeparableAR, ProductLM, IsotropicLM, OneDirectionLM]
LongMemoryModel = Union[ProductLM, IsotropicLM, OneDirectionLM]


def _rejection(propose, accept, size: int) -> np.ndarray:
    out, have, tried = [], 0, 0
    batch = max(size, 16)
    while have < size:
        pts = propose(batch)
        tried += batch
        pts = pts[accept(pts)]
        out.append(pts)
        have += len(pts)
        if tried > MAX_PROPOSALS * size:
            raise RuntimeError("rejection sampler exceeded its proposal cap")
    return np.concatenate(out)[:size]


def _rejection_1d(propose, size: int) -> np.ndarray:
    out, have, tried = [], 0, 0
    batch = max(size, 16)
    while have < size:
        x, keep = propose(batch)
        tried += batch
        out.append(x[keep])
        have += int(keep.sum())
        if tried > MAX_PROPOSALS * size:
            raise RuntimeError("rejection sampler exceeded its proposal cap")
    return np.concatenate(out)[:size]


# --------------------------------------------------------------------------
# Spec strings

_KINDS = {
    "white": (WhiteNoise, ()),
    "ar": (SeparableAR, ("a",)),
    "product": (ProductLM, ("a1", "a2")),
    "iso": (IsotropicLM, ("a",)),
    "oneline": (OneDirectionLM, ("a", "k")),
}
_PARAM_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*=\s*(\S+)\s*$")


def parse_model(text: str) -> ModelSpec:
    """Parse ``ar:a=0.5``, ``product:a1=-0.5,a2=-0.5``, ``iso:a=-1``,
    ``oneline:a=-0.5,k=-1`` or ``white``."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind not in _KINDS:
        raise ModelSpecError(f"unknown model kind {kind!r} in {text!r}")
    cls, names = _KINDS[kind]
    params = {}
    for tok in filter(None, (t.strip() for t in rest.split(","))):
        m = _PARAM_RE.match(tok)
        if m is None:
            raise ModelSpecError(f"malformed parameter {tok!r} in {text!r}")
        key, raw = m.groups()
        if key not in names:
            raise ModelSpecError(f"unknown parameter {key!r} for model {kind!r}")
        if key in params:
            raise ModelSpecError(f"duplicate parameter {key!r} in {text!r}")
        try:
            params[key] = int(raw) if key == "k" else float(raw)
        except ValueError:
            raise ModelSpecError(f"bad value {raw!r} for parameter {key!r}") from None
    missing = [n for n in names if n not in params]
    if missing:
        raise ModelSpecError(f"model {kind!r} needs {', '.join(missing)}")
    return cls(*(params[n] for n in names))


def gamma_of(model: ModelSpec):
    """Partial-sum growth exponent of a long-memory model, ``None`` otherwise."""
    return model.gamma


# --------------------------------------------------------------------------
# Spectral method


@dataclass(frozen=True, eq=False)
class SpectralSample:
    points: np.ndarray  # (N, 2) frequencies in [-pi, pi]^2
    phases: np.ndarray  # (N,) uniforms in [0, 1)


def _require_lm(model) -> None:
    if not getattr(model, "long_memory", False):
        raise ModelSpecError(f"{model.spec_string()} is not a long-memory model")


def spectral_density(model: LongMemoryModel, x) -> float | np.ndarray:
    """Unnormalised spectral density; ``inf`` on the singular set."""
    _require_lm(model)
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x) > math.pi):
        raise ValueError("frequencies must lie in [-pi, pi]^2")
    with np.errstate(divide="ignore"):
        val = model.density(x[..., 0], x[..., 1])
    return float(val) if np.ndim(val) == 0 else val


def sample_spectral_point(model: LongMemoryModel, rng: RngLike, size: int | None = None) -> np.ndarray:
    """Exact draw(s) from the normalised spectral density."""
    _require_lm(model)
    gen = as_generator(rng)
    pts = model.sample(gen, 1 if size is None else size)
    return pts[0] if size is None else pts


def draw_spectral_sample(model: LongMemoryModel, n_waves: int, rng: RngLike) -> SpectralSample:
    gen = as_generator(rng)
    points = sample_spectral_point(model, gen, n_waves)
    phases = gen.random(n_waves)
    return SpectralSample(points, phases)


def simulate_spectral(
    model: LongMemoryModel, n: int, n_waves: int = DEFAULT_N_WAVES, rng: RngLike = None
) -> Field:
    """``n x n`` Gaussian-approximate field with the model's spectral density."""
    _require_lm(model)
    if n_waves < 100:
        raise ValueError("n_waves must be at least 100")
    sample = draw_spectral_sample(model, n_waves, rng)
    idx = np.arange(1, n + 1, dtype=np.float64)
    row = np.multiply.outer(idx, sample.points[:, 0])
    col = np.multiply.outer(idx, sample.points[:, 1]) + TWO_PI * sample.phases
    # cos(a + b) = cos a cos b - sin a sin b turns the wave sum into two matmuls
    x = np.cos(row) @ np.cos(col).T - np.sin(row) @ np.sin(col).T
    x *= math.sqrt(2.0 * model.total_mass() / n_waves)
    return Field(x)


def simulate_ar(n: int, a: float, burn_in: int = DEFAULT_BURN_IN, rng: RngLike = None) -> Field:
    """Separable AR field from zero boundary values, trailing ``n x n`` block."""
    SeparableAR(a)
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    m = n + burn_in
    eps = as_generator(rng).standard_normal((m, m))
    x = _backend.kernels.ar_filter_2d(eps, float(a))
    return Field(x[burn_in:, burn_in:])


def simulate(
    model: ModelSpec,
    n: int,
    rng: RngLike,
    n_waves: int = DEFAULT_N_WAVES,
    burn_in: int = DEFAULT_BURN_IN,
) -> Field:
    """Draw one ``n x n`` field from any model."""
    if isinstance(model, str):
        model = parse_model(model)
    if isinstance(model, WhiteNoise):
        return gaussian_noise_field((n, n), rng)
    if isinstance(model, SeparableAR):
        return simulate_ar(n, model.a, burn_in, rng)
    return simulate_spectral(model, n, n_waves, rng)
