"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each row reports the best wall time of ``--repeat`` calls for both backends on
the same input, and their ratio.  Without a built extension only the fallback
column is filled.
"""
import argparse
import timeit

import numpy as np

from vsfield import _backend, _fallback


def cases():
    rng = np.random.default_rng(0)
    x128 = rng.normal(size=(128, 128))
    x128 -= x128.mean()
    x256 = rng.normal(size=(256, 256))
    x256 -= x256.mean()
    noise500 = rng.normal(size=(500, 500))
    eps = rng.normal(size=(456, 456))
    return [
        ("lrv 128^2 q=30", "lrv", (x128, 30, True)),
        ("lrv 256^2 q=40", "lrv", (x256, 40, True)),
        ("psum_moments 256^2", "psum_moments", (x256,)),
        ("sheet_u grid 500", "sheet_u", (noise500,)),
        ("ar_filter_2d 456^2", "ar_filter_2d", (eps, 0.5)),
    ]


def best(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5, help="timed calls per kernel (default 5)")
    args = ap.parse_args(argv)
    compiled = _backend.compiled()
    print(f"{'kernel':<22}{'cython s':>12}{'numpy s':>12}{'speedup':>10}")
    for label, name, inputs in cases():
        t_py = best(getattr(_fallback, name), inputs, args.repeat)
        if compiled is None:
            print(f"{label:<22}{'-':>12}{t_py:>12.4f}{'-':>10}")
            continue
        t_c = best(getattr(compiled, name), inputs, args.repeat)
        print(f"{label:<22}{t_c:>12.4f}{t_py:>12.4f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
