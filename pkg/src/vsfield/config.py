"""Plain ``key = value`` experiment files.

Blank lines and ``#`` comments are ignored.  Every key must be known; a typo is
an error rather than a silently ignored setting.
"""
from __future__ import annotations

from pathlib import Path

from .exceptions import ConfigError

KINDS = ("run", "power", "sweep")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _models(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(";") if t.strip())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _kind(text: str) -> str:
    if text not in KINDS:
        raise ValueError(f"kind must be one of {', '.join(KINDS)}")
    return text


# key -> (parser, default); None default means "derived" or "required"
EXPERIMENT_KEYS = {
    "kind": (_kind, "run"),
    "model": (str, None),
    "models": (_models, None),
    "a_values": (_floats, None),
    "q_values": (_ints, None),
    "n": (int, 128),
    "q": (int, None),
    "reps": (int, None),
    "alpha": (float, 0.1),
    "alphas": (_floats, (0.01, 0.05, 0.1)),
    "seed": (int, 0),
    "n_waves": (int, None),
    "burn_in": (int, 100),
    "signed_lags": (_bool, True),
    "fast": (_bool, False),
    "out": (str, "."),
    "null_table": (str, None),
    "null_grid": (int, 1000),
    "null_reps": (int, 10_000),
    "null_seed": (int, 0),
    "auto_null": (_bool, False),
}


def read_kv(path) -> dict[str, str]:
    """Raw ``key -> value`` strings from a config file."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {line!r}")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = val.strip()
    return out


def parse_assignments(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"expected key=value, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def resolve(raw: dict[str, str], overrides: dict[str, str] | None = None) -> dict:
    """Typed settings: file values, then ``overrides`` on top, then defaults."""
    merged = dict(raw)
    merged.update(overrides or {})
    unknown = sorted(set(merged) - set(EXPERIMENT_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}" + (f" (and {len(unknown) - 1} more)" if len(unknown) > 1 else ""))
    out = {}
    for key, (parse, default) in EXPERIMENT_KEYS.items():
        if key in merged:
            try:
                out[key] = parse(merged[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
        else:
            out[key] = default
    return out
