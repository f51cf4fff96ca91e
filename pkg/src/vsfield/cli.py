"""Command line entry point: ``vsfield {simulate,test,null,experiment}``.

Exit status is 0 whenever the tool ran, whatever the test verdict; 1 signals a
tool failure (bad input file, degenerate field, missing table) and 2 a usage
error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config as cfgmod
from .exceptions import ConfigError, ModelSpecError, NullTableError, VSFieldError
from .experiments import (
    FAST_N_WAVES,
    FAST_REPS,
    POWER_REPS,
    SIZE_REPS,
    ExperimentConfig,
    power_curve,
    qvalue_sweep,
    run_experiment,
    write_power_csv,
    write_sweep_csv,
)
from .field import RngSpec, read_field, write_field
from .nulldist import (
    DEFAULT_GRID,
    DEFAULT_REPS,
    DEFAULT_SEED,
    build_null_table,
    cached_null_table,
    read_null_table,
    u1_cdf,
    write_null_table,
)
from .simulators import DEFAULT_BURN_IN, DEFAULT_N_WAVES, parse_model, simulate
from .statistic import VsConfig, default_q, vs_statistic

Q_HELP = (
    "bandwidth q; default 30 for n=128 and 40 for n=256 (the calibrated values), "
    "otherwise round(30*(n/128)**0.4) with n the smallest side"
)


class UsageError(Exception):
    pass


def _positive(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return val


def _prob(text: str) -> float:
    val = float(text)
    if not 0.0 < val < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return val


def _fmt(x: float) -> str:
    return format(x, ".10g")


# --------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    try:
        model = parse_model(args.model)
    except ModelSpecError as exc:
        raise UsageError(str(exc)) from None
    rng = RngSpec(args.seed, args.stream)
    fld = simulate(model, args.n, rng, n_waves=args.waves, burn_in=args.burn_in)
    write_field(fld, args.out)
    print(f"wrote {args.n}x{args.n} field ({model.spec_string()}) to {args.out}")
    if model.gamma is not None:
        print(f"gamma={model.gamma:g}")
    return 0


def _default_table(d: int, jobs: int):
    print(
        f"using cached null table d={d} grid={DEFAULT_GRID} reps={DEFAULT_REPS} seed={DEFAULT_SEED} "
        "(built on first use)",
        file=sys.stderr,
    )
    return cached_null_table(d, DEFAULT_GRID, DEFAULT_REPS, DEFAULT_SEED, jobs=jobs)


def cmd_test(args) -> int:
    fld = read_field(args.input)
    table = read_null_table(args.null_table) if args.null_table else _default_table(fld.d, args.jobs)
    table.require_dimension(fld.d)
    q = args.q if args.q is not None else default_q(min(fld.dims))
    res = vs_statistic(fld, VsConfig(q, signed_lags=not args.absolute_lags))
    c_alpha = table.quantile(1.0 - args.alpha)
    p = table.p_value(res.m_n)
    verdict = "REJECT" if res.m_n > c_alpha else "ACCEPT"
    print(f"M_n       = {_fmt(res.m_n)}")
    print(f"s_hat_sq  = {_fmt(res.s_hat_sq)}")
    print(f"q         = {q}")
    print(f"c(alpha)  = {_fmt(c_alpha)}  (alpha={args.alpha:g})")
    print(f"p-value   = {_fmt(p)}")
    print(f"verdict   = {verdict}")
    print(
        f"RESULT m_n={res.m_n!r} s_hat_sq={res.s_hat_sq!r} q={q} alpha={args.alpha!r} "
        f"c_alpha={c_alpha!r} p_value={p!r} verdict={verdict}"
    )
    return 0


def cmd_null(args) -> int:
    table = build_null_table(args.d, args.grid, args.reps, args.seed, jobs=args.jobs)
    write_null_table(table, args.out)
    print(f"wrote null table d={args.d} grid={args.grid} reps={args.reps} seed={args.seed} to {args.out}")
    print(f"mean={_fmt(table.mean())}")
    print(f"variance={_fmt(table.variance())}")
    print(f"q90={_fmt(table.quantile(0.90))}")
    print(f"q95={_fmt(table.quantile(0.95))}")
    if args.d == 1:
        from scipy.stats import kstest

        ks = kstest(table.sorted_values, u1_cdf).statistic
        print(f"ks_distance_kolmogorov={_fmt(ks)}")
    return 0


def _experiment_table(settings: dict, jobs: int):
    path = settings["null_table"]
    if path and Path(path).exists():
        return read_null_table(path)
    if not settings["auto_null"]:
        where = f" at {path}" if path else ""
        raise NullTableError(f"no null table{where}; pass --auto-null to build one")
    table = cached_null_table(
        2, settings["null_grid"], settings["null_reps"], settings["null_seed"], jobs=jobs
    )
    if path:
        write_null_table(table, path)
    return table


def cmd_experiment(args) -> int:
    raw = cfgmod.read_kv(args.config) if args.config else {}
    overrides = cfgmod.parse_assignments(args.set)
    for key in ("reps", "seed", "out"):
        if getattr(args, key) is not None:
            overrides[key] = str(getattr(args, key))
    if args.fast:
        overrides["fast"] = "1"
    if args.auto_null:
        overrides["auto_null"] = "1"
    s = cfgmod.resolve(raw, overrides)

    kind = s["kind"]
    if s["fast"]:
        s["reps"] = min(s["reps"] or FAST_REPS, FAST_REPS)
        s["n_waves"] = FAST_N_WAVES
    s["reps"] = s["reps"] or (POWER_REPS if kind == "power" else SIZE_REPS)
    s["n_waves"] = s["n_waves"] or DEFAULT_N_WAVES
    s["q"] = s["q"] or default_q(s["n"])

    echo = [(k, s[k]) for k in sorted(s) if k not in ("out", "auto_null", "null_table")]
    echo = [(k, _echo(v)) for k, v in echo]
    print("resolved configuration:")
    for k, v in echo:
        print(f"  {k}={v}")

    table = _experiment_table(s, args.jobs)
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)

    if kind == "run":
        if not s["model"]:
            raise ConfigError("kind=run needs 'model'")
        cfg = ExperimentConfig(
            parse_model(s["model"]), s["n"], s["q"], s["reps"], s["alpha"], s["seed"],
            n_waves=s["n_waves"], burn_in=s["burn_in"], signed_lags=s["signed_lags"],
        )
        report = run_experiment(cfg, jobs=args.jobs, table=table)
        report.write_csv(out / "replicates.csv")
        row = {
            "model": cfg.model.spec_string(),
            "gamma": "" if cfg.model.gamma is None else cfg.model.gamma,
            "n": cfg.n, "q": cfg.q, "alpha": cfg.alpha, "power": report.rejection_rate(),
        }
        write_power_csv([row], out / "summary.csv", header=echo)
        print(f"rejection_rate={report.rejection_rate():g} mean_m_n={_fmt(report.mean_m_n)}")
    elif kind == "power":
        if not s["models"]:
            raise ConfigError("kind=power needs 'models' (separated by ';')")
        models = [parse_model(m) for m in s["models"]]
        reports: list = []
        rows = power_curve(
            models, s["n"], s["q"], s["reps"], s["alphas"], s["seed"], table,
            jobs=args.jobs, n_waves=s["n_waves"], reports=reports, signed_lags=s["signed_lags"],
        )
        for i, rep in enumerate(reports):
            rep.write_csv(out / f"replicates_{i}.csv")
        write_power_csv(rows, out / "summary.csv", header=echo)
        for row in rows:
            print(f"{row['model']} gamma={row['gamma']:g} alpha={row['alpha']:g} power={row['power']:g}")
    else:
        if not (s["a_values"] and s["q_values"]):
            raise ConfigError("kind=sweep needs 'a_values' and 'q_values'")
        rows = qvalue_sweep(
            s["a_values"], s["q_values"], s["n"], s["reps"], s["seed"], table,
            jobs=args.jobs, burn_in=s["burn_in"], signed_lags=s["signed_lags"],
        )
        write_sweep_csv(rows, out / "ecdf.csv", header=echo)
        for row in rows:
            if abs(row["x"] - 0.1) < 1e-12:
                print(f"a={row['a']:g} q={row['q']} size@0.10={row['ecdf']:g}")
    print(f"outputs written to {out}")
    return 0


def _echo(v) -> str:
    if isinstance(v, tuple):
        return ";".join(map(str, v)) if v and isinstance(v[0], str) else ",".join(map(str, v))
    if isinstance(v, bool):
        return str(int(v))
    return "" if v is None else str(v)


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="vsfield", description="V/S test of long memory for random fields")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a field and write it to a file", formatter_class=fmt)
    p.add_argument("--model", required=True,
                   help="white | ar:a=A | product:a1=A1,a2=A2 | iso:a=A | oneline:a=A,k=K")
    p.add_argument("--n", type=_positive, required=True, help="field side")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--stream", type=int, default=0, help="stream id under the master seed")
    p.add_argument("--out", required=True, help="output file (.csv text, .vsf binary)")
    p.add_argument("--waves", type=_positive, default=DEFAULT_N_WAVES, help="cosines in the spectral method")
    p.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN, help="AR burn-in rows/columns")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("test", help="run the V/S test on a field file", formatter_class=fmt)
    p.add_argument("input", help="field file")
    p.add_argument("--q", type=_positive, default=None, help=Q_HELP)
    p.add_argument("--null-table", default=None,
                   help="null table file; default: cached table with grid 1000, 10000 reps, seed 0")
    p.add_argument("--alpha", type=_prob, default=0.05, help="significance level")
    p.add_argument("--absolute-lags", action="store_true",
                   help="evaluate every covariance in s_hat_sq at absolute lags instead of signed ones")
    p.add_argument("--jobs", type=_positive, default=1, help="workers if the default table must be built")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("null", help="tabulate the limiting null law by simulation", formatter_class=fmt)
    p.add_argument("--d", type=_positive, default=2, help="field dimension")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID, help="lattice points per side of the sheet")
    p.add_argument("--reps", type=_positive, default=DEFAULT_REPS, help="number of draws")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed")
    p.add_argument("--out", default="null.vsn", help="output (.vsn binary, .txt text)")
    p.add_argument("--jobs", type=_positive, default=1, help="worker processes")
    p.set_defaults(func=cmd_null)

    p = sub.add_parser("experiment", help="run a size/power study from a key=value config", formatter_class=fmt)
    p.add_argument("config", nargs="?", default=None, help="config file (key = value lines)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--reps", type=_positive, default=None,
                   help=f"replicates (default {SIZE_REPS} for size studies, {POWER_REPS} for power)")
    p.add_argument("--seed", type=int, default=None, help="master seed (config default 0)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--fast", action="store_true",
                   help=f"CI tier: at most {FAST_REPS} reps and {FAST_N_WAVES} spectral waves")
    p.add_argument("--auto-null", action="store_true", help="build the null table if it is missing")
    p.add_argument("--jobs", type=_positive, default=1, help="worker processes")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "null" and args.grid < 2:
        parser.error("--grid must be at least 2")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (VSFieldError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
