#!/usr/bin/env python3
"""Benchmark the numba kernels against the numpy fallback path.

Usage: python3 benchmarks/bench_kernels.py [n_records]

Times the three metric-engine kernels on synthetic logs and prints both
paths side by side. The numpy path is what WB_DISABLE_NUMBA=1 selects at
runtime; numbers here justify (or indict) shipping the JIT path as default.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from watchbench import _kernels


def timeit(fn, *args, repeat: int = 5) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 1_000_000
    rng = np.random.default_rng(0)
    conf = rng.random(n)
    valid = rng.random(n) < 0.9
    conf_masked = conf.copy()
    conf_masked[~valid] = np.nan
    correct = rng.random(n) < 0.7
    grid = np.array([i / 24 for i in range(25)])
    ell = rng.uniform(-100.0, 0.0, size=(n // 10, 5))
    conf_acc = conf[valid]
    correct_acc = correct[valid]

    cases = [
        ("sweep_counts (n=%d, 25 eps)" % n, (conf_masked, valid, correct, grid),
         getattr(_kernels, "_sweep_counts_nb", None), _kernels._sweep_counts_np),
        ("ece_binned   (n=%d)" % len(conf_acc), (conf_acc, correct_acc, 10),
         getattr(_kernels, "_ece_binned_nb", None), _kernels._ece_binned_np),
        ("renorm_batch (n=%d rows)" % len(ell), (ell,),
         getattr(_kernels, "_renorm_batch_nb", None), _kernels._renorm_batch_np),
    ]

    print(f"numba available: {_kernels.HAVE_NUMBA}; active path: {_kernels.active_path()}")
    print(f"{'kernel':42s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, args, nb_fn, np_fn in cases:
        t_np = timeit(np_fn, *args)
        if nb_fn is None:
            print(f"{name:42s} {t_np * 1e3:9.2f}ms {'n/a':>10s} {'n/a':>8s}")
            continue
        nb_fn(*args)  # compile before timing
        t_nb = timeit(nb_fn, *args)
        print(f"{name:42s} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms {t_np / t_nb:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
