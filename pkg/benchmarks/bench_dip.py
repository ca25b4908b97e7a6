#!/usr/bin/env python3
"""Benchmark the compiled dip kernel against the pure-Python fallback.

The dip statistic sits inside the Monte-Carlo null loop (M dips per sample
size, hundreds of sample sizes per pipeline run), so kernel speed dominates
end-to-end runtime.  Run after ``python setup.py build_ext --inplace``:

    python benchmarks/bench_dip.py [--quick]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from crowdlab.dip import _pure  # noqa: E402

try:
    from crowdlab.dip import _core
except ImportError:
    _core = None


def time_backend(fn, rows: np.ndarray, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(rows)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller grids, one repeat")
    args = parser.parse_args()

    cases = [(500, 50), (500, 200), (200, 1000)] if args.quick else [
        (2000, 50),
        (2000, 200),
        (500, 1000),
        (100, 5000),
    ]
    repeats = 1 if args.quick else 3
    rng = np.random.default_rng(0)

    print(f"{'M x n':>12}  {'pure (s)':>10}  {'compiled (s)':>13}  {'speedup':>8}")
    for m, n in cases:
        rows = np.sort(rng.random((m, n)), axis=1)
        t_pure = time_backend(_pure.dip_rows, rows, repeats)
        if _core is None:
            print(f"{m:>6} x {n:<4}  {t_pure:>10.3f}  {'not built':>13}  {'-':>8}")
            continue
        t_core = time_backend(_core.dip_rows, rows, repeats)
        if not np.array_equal(_pure.dip_rows(rows), _core.dip_rows(rows)):
            print("backends disagree!", file=sys.stderr)
            return 1
        print(f"{m:>6} x {n:<4}  {t_pure:>10.3f}  {t_core:>13.4f}  {t_pure / t_core:>7.0f}x")
    if _core is None:
        print("\ncompiled kernel missing; build with: python setup.py build_ext --inplace")
    return 0


if __name__ == "__main__":
    sys.exit(main())
