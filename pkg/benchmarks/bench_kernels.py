"""Compare the compiled and pure-Python kernel backends.

Run from the repository root:  python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from slowpairs import _pykernels

try:
    from slowpairs import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(rng):
    gates = 200_000_000
    cand = np.sort(rng.choice(gates, size=400_000, replace=False)).astype(np.int64)
    a = np.unique(rng.integers(0, gates, 300_000)).astype(np.int64)
    b = np.unique(np.concatenate([a[::3] + 1, rng.integers(0, gates, 200_000)])).astype(np.int64)
    uniforms = rng.random(2_000_000)
    return {
        "dead_time_filter (4e5 candidates, d=1000)": lambda k: k.dead_time_filter(cand, 1000, 0),
        "count_offset_matches (3e5 x 3e5)": lambda k: k.count_offset_matches(a, b, 1),
        "dense_gated_detector (2e6 gates, p=1e-3)": lambda k: k.dense_gated_detector(uniforms, 1e-3, 1000, 0),
    }


def check_agreement(bench):
    for name, fn in bench.items():
        got_c, got_py = fn(_ckernels), fn(_pykernels)
        if isinstance(got_c, tuple):
            same = all(np.array_equal(x, y) for x, y in zip(got_c, got_py))
        else:
            same = got_c == got_py
        if not same:
            raise SystemExit(f"backends disagree on {name}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    bench = cases(np.random.default_rng(0))
    if _ckernels is None:
        print("compiled backend not available; timing pure Python only")
    else:
        check_agreement(bench)
    print(f"{'kernel':45s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in bench.items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:45s} {t_py:12.2f} {'-':>12s} {'-':>8s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:45s} {t_py:12.2f} {t_c:12.2f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
