"""Lattice field container, seeded random streams, prefix sums and field files.

A :class:`Field` is a C-contiguous float64 array whose shape is the lattice
``dims``; ``Field.values.ravel()`` is the row-major storage (last index
fastest).  Everything here is immutable after construction.
"""
from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .exceptions import (
    CellParseError,
    DimensionMismatchError,
    FieldFormatError,
    HeaderError,
    InvalidFieldError,
)

__all__ = [
    "Field",
    "PrefixSum",
    "RngSpec",
    "as_generator",
    "prefix_sum",
    "difference",
    "field_mean",
    "center",
    "gaussian_noise_field",
    "read_field",
    "write_field",
]

# Stream domains keep e.g. null-table replicate 7 and experiment replicate 7
# from sharing deviates when the caller reuses one master seed.
DOMAIN_FIELD = 0
DOMAIN_NULL = 1


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, order="C", copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Field:
    """A real-valued sample on the rectangle ``{1..n_1} x ... x {1..n_d}``."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, order="C", copy=True)
        if arr.ndim == 0 or arr.size == 0:
            raise InvalidFieldError("a field needs at least one dimension and one value")
        if not np.all(np.isfinite(arr)):
            raise InvalidFieldError("field values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_flat(cls, dims: Sequence[int], flat) -> "Field":
        dims = tuple(int(n) for n in dims)
        if not dims or any(n <= 0 for n in dims):
            raise InvalidFieldError(f"dims must be positive, got {dims}")
        flat = np.asarray(flat, dtype=np.float64).ravel()
        if flat.size != int(np.prod(dims)):
            raise DimensionMismatchError(
                f"dims {'x'.join(map(str, dims))} need {int(np.prod(dims))} values, got {flat.size}"
            )
        return cls(flat.reshape(dims))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def d(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PrefixSum:
    """Rectangle sums: ``cumsums[j]`` is the sum of the source over ``1 <= i <= j``."""

    cumsums: np.ndarray

    @property
    def dims(self) -> tuple[int, ...]:
        return self.cumsums.shape

    @property
    def total(self) -> float:
        return float(self.cumsums[(-1,) * self.cumsums.ndim])


@dataclass(frozen=True)
class RngSpec:
    """Key of an independent, reproducible random stream.

    The stream is a Philox (counter-based) generator seeded from
    ``SeedSequence(master_seed, spawn_key=(domain, stream_id))``, so it does not
    depend on how replicates are distributed over workers.
    """

    master_seed: int
    stream_id: int = 0
    domain: int = DOMAIN_FIELD

    def __post_init__(self):
        if self.master_seed < 0 or self.master_seed >= 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.stream_id < 0:
            raise ValueError("stream_id must be non-negative")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.domain, self.stream_id))
        return np.random.Generator(np.random.Philox(seq))


RngLike = Union[RngSpec, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSpec):
        return rng.generator()
    raise TypeError(f"expected RngSpec or numpy Generator, got {type(rng).__name__}")


def _as_array(field) -> np.ndarray:
    return field.values if isinstance(field, Field) else Field(field).values


def prefix_sum(field: Field) -> PrefixSum:
    """Cumulative rectangle sums, one sequential pass per dimension."""
    out = np.array(_as_array(field), dtype=np.float64)
    for axis in range(out.ndim):
        np.cumsum(out, axis=axis, out=out)
    return PrefixSum(_frozen(out))


def difference(prefix: PrefixSum | np.ndarray) -> Field:
    """Inverse of :func:`prefix_sum` by inclusion-exclusion differencing."""
    arr = prefix.cumsums if isinstance(prefix, PrefixSum) else np.asarray(prefix, dtype=np.float64)
    out = arr
    for axis in range(arr.ndim):
        out = np.diff(out, axis=axis, prepend=0.0)
    return Field(out)


def field_mean(field: Field) -> float:
    return float(np.mean(_as_array(field)))


def center(field: Field) -> Field:
    values = _as_array(field)
    out = values - values.mean()
    out -= out.mean()
    return Field(out)


def gaussian_noise_field(dims: Sequence[int] | int, rng: RngLike) -> Field:
    """I.i.d. standard normal field drawn from ``rng``."""
    if isinstance(dims, (int, np.integer)):
        dims = (int(dims),)
    dims = tuple(int(n) for n in dims)
    if not dims or any(n <= 0 for n in dims):
        raise InvalidFieldError(f"dims must be positive, got {dims}")
    return Field(as_generator(rng).standard_normal(dims))


# --------------------------------------------------------------------------
# File formats

_CSV_HEADER = re.compile(r"^#\s*vsfield\s+v1\s+dims=(\d+(?:x\d+)*)\s*$")
FIELD_MAGIC = b"VSF1"
_BINARY_SUFFIXES = {".vsf", ".bin"}


def _format_for(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "binary"):
            raise ValueError(f"unknown field format {fmt!r}")
        return fmt
    return "binary" if path.suffix.lower() in _BINARY_SUFFIXES else "csv"


def write_field(field: Field, path, fmt: str | None = None) -> None:
    """Write ``field`` as CSV (``.csv``, default) or binary (``.vsf``/``.bin``)."""
    path = Path(path)
    values = _as_array(field)
    if _format_for(path, fmt) == "binary":
        with open(path, "wb") as fh:
            fh.write(FIELD_MAGIC)
            fh.write(struct.pack(f"<I{values.ndim}I", values.ndim, *values.shape))
            fh.write(values.astype("<f8").tobytes())
        return
    rows = values.reshape(-1, values.shape[-1])
    with open(path, "w") as fh:
        fh.write(f"# vsfield v1 dims={'x'.join(map(str, values.shape))}\n")
        for row in rows:
            fh.write(",".join(format(v, ".17g") for v in row))
            fh.write("\n")


def read_field(path, fmt: str | None = None) -> Field:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if fmt == "binary" or (fmt is None and head == FIELD_MAGIC):
        return _read_binary(path)
    return _read_csv(path)


def _read_binary(path: Path) -> Field:
    data = path.read_bytes()
    if data[:4] != FIELD_MAGIC:
        raise HeaderError(f"{path}: missing VSF1 magic")
    if len(data) < 8:
        raise HeaderError(f"{path}: truncated header")
    (d,) = struct.unpack_from("<I", data, 4)
    offset = 8 + 4 * d
    if d == 0 or len(data) < offset:
        raise HeaderError(f"{path}: bad dimension count {d}")
    dims = struct.unpack_from(f"<{d}I", data, 8)
    payload = data[offset:]
    expected = int(np.prod(dims))
    if len(payload) != 8 * expected:
        raise DimensionMismatchError(
            f"{path}: dims {'x'.join(map(str, dims))} need {expected} values, "
            f"file holds {len(payload) / 8:g}"
        )
    return Field.from_flat(dims, np.frombuffer(payload, dtype="<f8"))


def _read_csv(path: Path) -> Field:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise HeaderError(f"{path}: empty file")
    match = _CSV_HEADER.match(lines[0].strip())
    if match is None:
        raise HeaderError(f"{path}: expected '# vsfield v1 dims=<n1>x<n2>...', got {lines[0]!r}")
    dims = tuple(int(tok) for tok in match.group(1).split("x"))
    if any(n <= 0 for n in dims):
        raise HeaderError(f"{path}: dims must be positive")
    values = []
    for row, line in enumerate(lines[1:], start=1):
        if not line.strip():
            continue
        for col, tok in enumerate(line.split(","), start=1):
            try:
                values.append(float(tok))
            except ValueError:
                raise CellParseError(row, col, tok.strip()) from None
    try:
        return Field.from_flat(dims, values)
    except DimensionMismatchError as exc:
        raise DimensionMismatchError(f"{path}: {exc}") from None
    except InvalidFieldError as exc:
        raise FieldFormatError(f"{path}: {exc}") from None
