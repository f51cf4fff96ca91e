"""Monte Carlo size and power studies of the V/S test.

Replicate ``r`` of an experiment with master seed ``s`` draws its field from
stream ``RngSpec(s, r)``; results are therefore identical for any number of
workers, and two experiments that share a seed see the same noise (common
random numbers across bandwidths or models of one family).
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DegenerateFieldError, ModelSpecError, NullTableError
from .field import RngSpec
from .nulldist import NullTable, read_null_table
from .simulators import (
    DEFAULT_BURN_IN,
    DEFAULT_N_WAVES,
    ModelSpec,
    SeparableAR,
    parse_model,
    simulate,
)
from .statistic import VsConfig, vs_statistic

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "qvalue_sweep",
    "power_curve",
    "ecdf_grid",
    "write_sweep_csv",
    "write_power_csv",
]

SIZE_REPS = 1000
POWER_REPS = 500
FAST_REPS = 200
FAST_N_WAVES = 2000
ECDF_STEP = 0.005
ECDF_MAX = 0.1

RECORD_DTYPE = np.dtype([("rep", "i8"), ("m_n", "f8"), ("s_hat_sq", "f8"), ("p_value", "f8")])


def _fmt(x) -> str:
    # repr is the shortest string that reads back as the same double
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _resolve_table(ref) -> NullTable:
    if isinstance(ref, NullTable):
        return ref
    if ref is None:
        raise NullTableError("experiment needs a null table")
    return read_null_table(ref)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    n: int
    q: int
    reps: int
    alpha: float
    master_seed: int
    null_table: NullTable | str | Path | None = field(default=None, compare=False)
    n_waves: int = DEFAULT_N_WAVES
    burn_in: int = DEFAULT_BURN_IN
    signed_lags: bool = True

    def __post_init__(self):
        if isinstance(self.model, str):
            object.__setattr__(self, "model", parse_model(self.model))
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        VsConfig(self.q).check((self.n, self.n))

    def items(self, table: NullTable | None = None) -> list[tuple[str, object]]:
        """Key/value echo used in report headers (no worker count, no paths)."""
        out = [
            ("model", self.model.spec_string()),
            ("gamma", "" if self.model.gamma is None else self.model.gamma),
            ("n", self.n),
            ("q", self.q),
            ("reps", self.reps),
            ("alpha", self.alpha),
            ("seed", self.master_seed),
            ("n_waves", self.n_waves),
            ("burn_in", self.burn_in),
            ("signed_lags", int(self.signed_lags)),
        ]
        if table is not None:
            out += [
                ("null_d", table.d),
                ("null_grid", table.grid_n),
                ("null_reps", table.reps),
                ("null_seed", table.master_seed),
            ]
        return out


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    config: ExperimentConfig
    table: NullTable
    records: np.ndarray  # RECORD_DTYPE, one row per replicate

    @property
    def p_values(self) -> np.ndarray:
        return self.records["p_value"]

    @property
    def n_degenerate(self) -> int:
        return int(np.count_nonzero(np.isnan(self.records["m_n"])))

    def rejection_rate(self, alpha: float | None = None) -> float:
        alpha = self.config.alpha if alpha is None else alpha
        # NaN p-values (degenerate replicates) never count as rejections
        return int(np.count_nonzero(self.p_values <= alpha)) / self.config.reps

    @property
    def mean_m_n(self) -> float:
        m = self.records["m_n"]
        m = m[~np.isnan(m)]
        return math.fsum(m) / m.size if m.size else float("nan")

    def summary(self) -> dict:
        return {
            "rejection_rate": self.rejection_rate(),
            "mean_m_n": self.mean_m_n,
            "n_degenerate": self.n_degenerate,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, val in self.config.items(self.table):
            buf.write(f"# {key}={_fmt(val)}\n")
        for key, val in self.summary().items():
            buf.write(f"# {key}={_fmt(val)}\n")
        buf.write("rep,m_n,s_hat_sq,p_value\n")
        for rec in self.records:
            buf.write(
                f"{int(rec['rep'])},{_fmt(float(rec['m_n']))},"
                f"{_fmt(float(rec['s_hat_sq']))},{_fmt(float(rec['p_value']))}\n"
            )
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())


def _run_block(args) -> np.ndarray:
    cfg, table, start, stop = args
    out = np.empty(stop - start, dtype=RECORD_DTYPE)
    vs_cfg = VsConfig(cfg.q, cfg.signed_lags)
    for i, rep in enumerate(range(start, stop)):
        fld = simulate(cfg.model, cfg.n, RngSpec(cfg.master_seed, rep), cfg.n_waves, cfg.burn_in)
        try:
            res = vs_statistic(fld, vs_cfg)
            out[i] = (rep, res.m_n, res.s_hat_sq, table.p_value(res.m_n))
        except DegenerateFieldError:
            out[i] = (rep, np.nan, np.nan, np.nan)
    return out


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, table: NullTable | None = None) -> ExperimentReport:
    """Simulate ``cfg.reps`` fields, test each, and collect the p-values.

    A replicate whose long-run variance estimate is not positive is kept with
    NaN statistic and p-value; it counts as a non-rejection.
    """
    table = _resolve_table(table if table is not None else cfg.null_table)
    table.require_dimension(2)
    size = max(1, min(100, math.ceil(cfg.reps / max(jobs, 1))))
    tasks = [(cfg, table, a, min(a + size, cfg.reps)) for a in range(0, cfg.reps, size)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_block, tasks))
    else:
        parts = [_run_block(t) for t in tasks]
    return ExperimentReport(cfg, table, np.concatenate(parts))


def ecdf_grid(p_values: np.ndarray, step: float = ECDF_STEP, upper: float = ECDF_MAX):
    """ECDF of ``p_values`` on ``0, step, ..., upper``; NaNs count in the denominator."""
    grid = np.round(np.arange(0.0, upper + step / 2, step), 10)
    p = np.sort(np.asarray(p_values)[~np.isnan(p_values)])
    counts = np.searchsorted(p, grid, side="right")
    return grid, counts / len(p_values)


def qvalue_sweep(
    a_values: Sequence[float],
    q_values: Sequence[int],
    n: int,
    reps: int,
    master_seed: int,
    table: NullTable,
    jobs: int = 1,
    burn_in: int = DEFAULT_BURN_IN,
    signed_lags: bool = True,
) -> list[dict]:
    """p-value ECDFs on ``[0, 0.1]`` for separable AR fields, per ``(a, q)``.

    All cells share the master seed, so for a given ``a`` every bandwidth is
    applied to the same fields.
    """
    rows = []
    for a in a_values:
        for q in q_values:
            cfg = ExperimentConfig(
                SeparableAR(a), n, q, reps, 0.1, master_seed, burn_in=burn_in, signed_lags=signed_lags
            )
            rep = run_experiment(cfg, jobs=jobs, table=table)
            grid, ecdf = ecdf_grid(rep.p_values)
            rows.extend({"a": a, "q": q, "x": float(x), "ecdf": float(e)} for x, e in zip(grid, ecdf))
    return rows


def power_curve(
    models: Iterable[ModelSpec],
    n: int,
    q: int,
    reps: int,
    alphas: Sequence[float],
    master_seed: int,
    table: NullTable,
    jobs: int = 1,
    n_waves: int = DEFAULT_N_WAVES,
    reports: list | None = None,
    signed_lags: bool = True,
) -> list[dict]:
    """Rejection rate per ``(model, alpha)`` for long-memory alternatives."""
    rows = []
    for model in models:
        model = parse_model(model) if isinstance(model, str) else model
        if not model.long_memory:
            raise ModelSpecError(f"power curves take long-memory models, got {model.spec_string()}")
        cfg = ExperimentConfig(
            model, n, q, reps, max(alphas), master_seed, n_waves=n_waves, signed_lags=signed_lags
        )
        rep = run_experiment(cfg, jobs=jobs, table=table)
        if reports is not None:
            reports.append(rep)
        for alpha in alphas:
            rows.append(
                {
                    "model": model.spec_string(),
                    "gamma": model.gamma,
                    "n": n,
                    "q": q,
                    "alpha": alpha,
                    "power": rep.rejection_rate(alpha),
                }
            )
    return rows


def _write_rows(rows: list[dict], columns: Sequence[str], path=None, header: Sequence = ()) -> str:
    buf = io.StringIO()
    for key, val in header:
        buf.write(f"# {key}={_fmt(val)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def write_sweep_csv(rows: list[dict], path=None, header: Sequence = ()) -> str:
    return _write_rows(rows, ("a", "q", "x", "ecdf"), path, header)


def write_power_csv(rows: list[dict], path=None, header: Sequence = ()) -> str:
    return _write_rows(rows, ("model", "gamma", "n", "q", "alpha", "power"), path, header)
