import os
from pathlib import Path

import pytest

from vsfield import ExperimentConfig, cached_null_table, run_experiment

CACHE = Path(os.environ.get("VSFIELD_TEST_CACHE", Path(__file__).resolve().parent.parent / ".vsfield_cache"))

# desk-scale null table shared by every Monte Carlo test
NULL_D2 = dict(d=2, grid_n=500, reps=10_000, master_seed=42)

# power studies: n=128 with its calibrated bandwidth, the fast spectral tier
POWER = dict(n=128, q=30, reps=500, n_waves=2000)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def null_table_d2():
    return cached_null_table(**NULL_D2, cache_dir=CACHE)


@pytest.fixture(scope="session")
def small_null_table_d2():
    return cached_null_table(2, 100, 2000, 7, cache_dir=CACHE)


@pytest.fixture(scope="session")
def power_report(null_table_d2):
    """``power_report(model, seed)``: memoised 500-replicate run at alpha 0.05."""
    memo = {}

    def get(model: str, seed: int):
        key = (model, seed)
        if key not in memo:
            cfg = ExperimentConfig(
                model, POWER["n"], POWER["q"], POWER["reps"], 0.05, seed, n_waves=POWER["n_waves"]
            )
            memo[key] = run_experiment(cfg, table=null_table_d2)
        return memo[key]

    return get


@pytest.fixture
def acceptance_line():
    def emit(number: int, ok: bool, text: str) -> None:
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} [{number:>2}] {text}")

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
