"""Monte Carlo tables of the limiting null law of M_n.

Under short memory M_n converges to

    U_d = int (B(t) - T(t) B(1))**2 dt - (int (B(t) - T(t) B(1)) dt)**2,

with ``B`` a Brownian sheet on ``[0, 1]^d`` and ``T(t) = t_1 * ... * t_d``.  A
draw of ``U_d`` discretizes ``B`` on the lattice ``k / g`` as a scaled prefix
sum of white noise and replaces both integrals by right-endpoint Riemann sums.
"""
from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend
from .exceptions import FieldFormatError, HeaderError, NullTableError
from .field import DOMAIN_NULL, RngLike, RngSpec, as_generator

__all__ = [
    "SheetGrid",
    "NullTable",
    "brownian_sheet",
    "u_d_realization",
    "u2_expanded_form",
    "draw_u",
    "build_null_table",
    "cached_null_table",
    "quantile",
    "p_value",
    "expected_u",
    "kolmogorov_cdf",
    "u1_cdf",
    "read_null_table",
    "write_null_table",
]

DEFAULT_GRID = 1000
DEFAULT_REPS = 10_000
DEFAULT_SEED = 0


@dataclass(frozen=True, eq=False)
class SheetGrid:
    """Brownian sheet values ``B(k / grid_n)`` for ``k`` in ``{1..grid_n}^d``."""

    grid_n: int
    values: np.ndarray

    @property
    def d(self) -> int:
        return self.values.ndim


def _lattice_product(g: int, d: int) -> np.ndarray:
    t = np.arange(1, g + 1) / g
    out = t
    for _ in range(d - 1):
        out = np.multiply.outer(out, t)
    return out


def _noise(grid_n: int, d: int, rng: RngLike) -> np.ndarray:
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    if d < 1:
        raise ValueError("d must be positive")
    return as_generator(rng).standard_normal((grid_n,) * d)


def brownian_sheet(grid_n: int, d: int, rng: RngLike) -> SheetGrid:
    """Exact-in-law Brownian sheet on the lattice ``{k / grid_n}``."""
    values = _noise(grid_n, d, rng)
    for axis in range(d):
        np.cumsum(values, axis=axis, out=values)
    values *= grid_n ** (-d / 2.0)
    values.setflags(write=False)
    return SheetGrid(grid_n, values)


def _clamp(u: float) -> float:
    # a variance; negative values can only be rounding
    return u if u > 0.0 else 0.0


def u_d_realization(sheet: SheetGrid) -> float:
    """Riemann-sum value of the null functional for one sheet."""
    b = sheet.values
    b1 = b[(-1,) * b.ndim]
    dev = b - _lattice_product(sheet.grid_n, b.ndim) * b1
    m1 = dev.mean()
    return _clamp(float(np.mean(dev * dev) - m1 * m1))


def u2_expanded_form(sheet: SheetGrid, constants: str = "riemann") -> float:
    """Evaluate the d=2 functional through its polynomial expansion.

    The expansion is

        int B^2 - 2 B(1) int t1 t2 B - (int B)^2 + c1 B(1) int B + c2 B(1)^2

    where, in the continuum, ``c1 = 1/2`` and ``c2 = 7/144``.  With
    ``constants="exact"`` those values are used and the result differs from
    :func:`u_d_realization` by ``O(1/grid_n)``.  With ``constants="riemann"``
    they are replaced by the lattice moments of ``t1 t2`` (``2 m1`` and
    ``m2 - m1**2``), which makes the two forms algebraically identical on the
    same lattice.
    """
    b = sheet.values
    if b.ndim != 2:
        raise ValueError("the expanded form is written for d=2")
    g = sheet.grid_n
    tt = _lattice_product(g, 2)
    b1 = float(b[-1, -1])
    int_b2 = float(np.mean(b * b))
    int_b = float(np.mean(b))
    int_tb = float(np.mean(tt * b))
    if constants == "exact":
        c1, c2 = 0.5, 7.0 / 144.0
    elif constants == "riemann":
        m1 = ((g + 1) / (2.0 * g)) ** 2
        m2 = ((g + 1) * (2 * g + 1) / (6.0 * g * g)) ** 2
        c1, c2 = 2.0 * m1, m2 - m1 * m1
    else:
        raise ValueError(f"constants must be 'riemann' or 'exact', got {constants!r}")
    u = int_b2 - 2.0 * b1 * int_tb - int_b * int_b + c1 * b1 * int_b + c2 * b1 * b1
    return _clamp(u)


def draw_u(d: int, grid_n: int, rng: RngLike) -> float:
    """One draw of the null functional via the fused kernel.

    Consumes the generator exactly like :func:`brownian_sheet`, so
    ``draw_u(d, g, spec) == u_d_realization(brownian_sheet(g, d, spec))`` up
    to summation order.
    """
    return _clamp(float(_backend.kernels.sheet_u(_noise(grid_n, d, rng))))


@dataclass(frozen=True, eq=False)
class NullTable:
    """Sorted Monte Carlo sample of the null law plus the inputs that made it."""

    d: int
    grid_n: int
    reps: int
    master_seed: int
    sorted_values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.sorted_values, dtype=np.float64)
        if vals.ndim != 1 or vals.size != self.reps:
            raise NullTableError(f"table declares reps={self.reps} but holds {vals.size} values")
        if vals.size and (np.any(np.diff(vals) < 0) or vals[0] < 0):
            raise NullTableError("table values must be sorted ascending and non-negative")
        vals.setflags(write=False)
        object.__setattr__(self, "sorted_values", vals)

    def quantile(self, p: float) -> float:
        return quantile(self, p)

    def p_value(self, m: float) -> float:
        return p_value(self, m)

    def mean(self) -> float:
        return float(np.mean(self.sorted_values))

    def variance(self) -> float:
        return float(np.var(self.sorted_values))

    def histogram(self, bins: int = 50):
        """``(counts, edges)`` of the sample, for plotting elsewhere."""
        return np.histogram(self.sorted_values, bins=bins)

    def require_dimension(self, d: int) -> None:
        if d != self.d:
            raise NullTableError(f"null table is for d={self.d}, field has d={d}")

    def __eq__(self, other):
        if not isinstance(other, NullTable):
            return NotImplemented
        return (self.d, self.grid_n, self.reps, self.master_seed) == (
            other.d, other.grid_n, other.reps, other.master_seed
        ) and np.array_equal(self.sorted_values, other.sorted_values)

    __hash__ = None


def quantile(table: NullTable, p: float) -> float:
    """Lower empirical quantile: the order statistic of rank ``ceil(p * reps)``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    # round away float noise such as 0.95 * 10000 = 9500.000000000002
    rank = max(1, math.ceil(round(p * table.reps, 9)))
    return float(table.sorted_values[rank - 1])


def p_value(table: NullTable, m: float) -> float:
    """Monte Carlo p-value ``(1 + #{U >= m}) / (reps + 1)``."""
    if not math.isfinite(m):
        raise ValueError("statistic must be finite")
    above = table.reps - int(np.searchsorted(table.sorted_values, m, side="left"))
    return (1 + above) / (table.reps + 1)


def _draw_block(args) -> np.ndarray:
    d, grid_n, master_seed, start, stop = args
    return np.array(
        [draw_u(d, grid_n, RngSpec(master_seed, rep, DOMAIN_NULL)) for rep in range(start, stop)]
    )


def _blocks(reps: int, jobs: int, size: int | None = None):
    size = size or max(1, min(500, math.ceil(reps / max(jobs, 1))))
    return [(i, min(i + size, reps)) for i in range(0, reps, size)]


def build_null_table(
    d: int = 2,
    grid_n: int = DEFAULT_GRID,
    reps: int = DEFAULT_REPS,
    master_seed: int = DEFAULT_SEED,
    jobs: int = 1,
) -> NullTable:
    """Draw ``reps`` independent values of the null law and sort them.

    Replicate ``i`` always uses stream ``i`` of ``master_seed``, so the table
    does not depend on ``jobs``.
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    tasks = [(d, grid_n, master_seed, a, b) for a, b in _blocks(reps, jobs)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_draw_block, tasks))
    else:
        parts = [_draw_block(t) for t in tasks]
    values = np.sort(np.concatenate(parts), kind="stable")
    return NullTable(d, grid_n, reps, master_seed, values)


def default_cache_dir() -> Path:
    env = os.environ.get("VSFIELD_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "vsfield"


def cache_path(d: int, grid_n: int, reps: int, master_seed: int, cache_dir=None) -> Path:
    root = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    return root / f"vsnull_d{d}_g{grid_n}_r{reps}_s{master_seed}.vsn"


def cached_null_table(
    d: int = 2,
    grid_n: int = DEFAULT_GRID,
    reps: int = DEFAULT_REPS,
    master_seed: int = DEFAULT_SEED,
    jobs: int = 1,
    cache_dir=None,
) -> NullTable:
    """Load the table for these inputs from the cache, building it on a miss."""
    path = cache_path(d, grid_n, reps, master_seed, cache_dir)
    if path.exists():
        table = read_null_table(path)
        if (table.d, table.grid_n, table.reps, table.master_seed) == (d, grid_n, reps, master_seed):
            return table
    table = build_null_table(d, grid_n, reps, master_seed, jobs=jobs)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(f".tmp{os.getpid()}")
    write_null_table(table, tmp)
    os.replace(tmp, path)
    return table


# --------------------------------------------------------------------------
# Analytic cross-checks


def expected_u(d: int) -> float:
    """Exact mean of the null law in dimension ``d``."""
    if d < 1:
        raise ValueError("d must be positive")
    return 0.5**d + 0.25**d - 2.0 * (1.0 / 3.0) ** d


def _kolmogorov_scalar(y: float, tol: float = 1e-12) -> float:
    if y <= 0.0:
        return 0.0
    if y < 1.0:
        # theta-function form converges quickly for small y
        c = math.sqrt(2.0 * math.pi) / y
        total, k = 0.0, 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * y * y))
            total += term
            if c * term < tol:
                break
            k += 1
        return min(1.0, c * total)
    total, k = 0.0, 1
    while True:
        term = math.exp(-2.0 * k * k * y * y)
        total += term if k % 2 else -term
        if term < tol:
            break
        k += 1
    return max(0.0, 1.0 - 2.0 * total)


def kolmogorov_cdf(y):
    """Kolmogorov distribution function ``1 - 2 sum (-1)**(k-1) exp(-2 k^2 y^2)``."""
    if np.isscalar(y):
        return _kolmogorov_scalar(float(y))
    y = np.asarray(y, dtype=np.float64)
    return np.vectorize(_kolmogorov_scalar, otypes=[np.float64])(y)


def u1_cdf(x):
    """Distribution function of the d=1 null law, ``F_K(pi * sqrt(x))``."""
    x = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    out = kolmogorov_cdf(np.pi * np.sqrt(x))
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# Files: text "# vsnull v1 d=.. grid=.. reps=.. seed=.." + one value per line,
# or binary VSN1 | u32 d | u32 grid | u64 reps | u64 seed | f64[reps], little-endian.

NULL_MAGIC = b"VSN1"
_BIN_HEADER = struct.Struct("<4sIIQQ")


def write_null_table(table: NullTable, path, fmt: str | None = None) -> None:
    path = Path(path)
    if fmt is None:
        fmt = "text" if path.suffix.lower() in (".txt", ".csv") else "binary"
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_BIN_HEADER.pack(NULL_MAGIC, table.d, table.grid_n, table.reps, table.master_seed))
            fh.write(table.sorted_values.astype("<f8").tobytes())
        return
    if fmt != "text":
        raise ValueError(f"unknown table format {fmt!r}")
    with open(path, "w") as fh:
        fh.write(
            f"# vsnull v1 d={table.d} grid={table.grid_n} reps={table.reps} seed={table.master_seed}\n"
        )
        for v in table.sorted_values:
            fh.write(format(v, ".17g"))
            fh.write("\n")


def read_null_table(path) -> NullTable:
    path = Path(path)
    if not path.exists():
        raise NullTableError(f"null table {path} not found")
    data = path.read_bytes()
    if data[:4] == NULL_MAGIC:
        if len(data) < _BIN_HEADER.size:
            raise HeaderError(f"{path}: truncated header")
        _, d, grid_n, reps, seed = _BIN_HEADER.unpack_from(data)
        payload = data[_BIN_HEADER.size:]
        if len(payload) != 8 * reps:
            raise FieldFormatError(f"{path}: header declares {reps} values, file holds {len(payload) // 8}")
        return NullTable(d, grid_n, reps, seed, np.frombuffer(payload, dtype="<f8"))
    lines = data.decode().splitlines()
    if not lines:
        raise HeaderError(f"{path}: empty file")
    meta = _parse_null_header(lines[0], path)
    values = []
    for i, line in enumerate(lines[1:], start=1):
        if line.strip():
            try:
                values.append(float(line))
            except ValueError:
                raise FieldFormatError(f"{path}: bad value {line!r} on data line {i}") from None
    return NullTable(meta["d"], meta["grid"], meta["reps"], meta["seed"], np.array(values))


def _parse_null_header(line: str, path) -> dict:
    parts = line.strip().split()
    if parts[:3] != ["#", "vsnull", "v1"]:
        raise HeaderError(f"{path}: expected '# vsnull v1 ...' header, got {line!r}")
    meta = {}
    for tok in parts[3:]:
        key, _, val = tok.partition("=")
        try:
            meta[key] = int(val)
        except ValueError:
            raise HeaderError(f"{path}: bad header entry {tok!r}") from None
    missing = {"d", "grid", "reps", "seed"} - meta.keys()
    if missing:
        raise HeaderError(f"{path}: header lacks {', '.join(sorted(missing))}")
    return meta
