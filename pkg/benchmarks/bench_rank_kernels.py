#!/usr/bin/env python3
"""Benchmark: compiled rank kernels vs the pure-numpy fallback.

Usage: python benchmarks/bench_rank_kernels.py [--sizes 100,1000,5492,10000]
"""

import argparse
import time

import numpy as np

from talkqa.metrics import _kernels_py

try:
    from talkqa import _native
except ImportError:
    _native = None


def time_call(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="100,1000,5492,10000")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    rng = np.random.default_rng(args.seed)
    print(f"{'n':>7} {'kernel':<16} {'python':>12} {'native':>12} {'speedup':>9}")
    for n in sizes:
        x = rng.integers(0, max(4, n // 4), size=n).astype(float)  # with ties
        y = rng.integers(0, max(4, n // 4), size=n).astype(float)
        for label, py_fn, native_fn, call_args in (
            ("kendall_counts", _kernels_py.kendall_counts, getattr(_native, "kendall_counts", None), (x, y)),
            ("average_ranks", _kernels_py.average_ranks, getattr(_native, "average_ranks", None), (x,)),
        ):
            t_py = time_call(py_fn, *call_args)
            if native_fn is None:
                print(f"{n:>7} {label:<16} {t_py * 1e3:>10.2f}ms {'(not built)':>12} {'-':>9}")
                continue
            assert_same(py_fn, native_fn, call_args)
            t_nat = time_call(native_fn, *call_args)
            print(
                f"{n:>7} {label:<16} {t_py * 1e3:>10.2f}ms {t_nat * 1e3:>10.2f}ms {t_py / t_nat:>8.1f}x"
            )


def assert_same(py_fn, native_fn, call_args):
    a = py_fn(*call_args)
    b = native_fn(*call_args)
    if isinstance(a, tuple):
        assert tuple(a) == tuple(b), "kernel mismatch"
    else:
        assert np.array_equal(a, b), "kernel mismatch"


if __name__ == "__main__":
    main()
