"""Benchmark the compiled kernels against the pure-NumPy fallback.

Usage: python benchmarks/bench_backends.py [--repeats N]

Times the full grounding pipeline over a spread of shapes, from the tiny
synthetic instances used in tests up to the production shape (36 regions
x 300 dims, 30 words), plus the scalar scoring kernels.
"""

import argparse
import time

import numpy as np

from tigereval import _kernels_py as python_kernels

try:
    from tigereval import _kernels as compiled_kernels
except ImportError:
    compiled_kernels = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best


def bench_shape(n, m, d, repeats):
    rng = np.random.default_rng(0)
    v = rng.standard_normal((n, d))
    w = rng.standard_normal((m, d))
    rows = {}
    rows["python"] = timeit(lambda: python_kernels.grounding_scores(v, w, 9.0), repeats)
    if compiled_kernels is not None:
        rows["compiled"] = timeit(
            lambda: compiled_kernels.grounding_scores(v, w, 9.0), repeats
        )
    return rows


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=2000)
    args = parser.parse_args()

    if compiled_kernels is None:
        print("note: compiled extension not available, timing fallback only\n")

    print(f"{'shape (n x m x d)':>22} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for n, m, d in [(4, 3, 4), (8, 6, 8), (36, 10, 32), (36, 30, 300), (36, 30, 1024)]:
        repeats = max(200, args.repeats // max(1, (n * m * d) // 5000))
        rows = bench_shape(n, m, d, repeats)
        py = rows["python"] * 1e6
        if "compiled" in rows:
            cy = rows["compiled"] * 1e6
            print(f"{f'{n} x {m} x {d}':>22} {py:>10.1f}us {cy:>10.1f}us {py / cy:>8.2f}x")
        else:
            print(f"{f'{n} x {m} x {d}':>22} {py:>10.1f}us {'-':>12} {'-':>9}")

    rng = np.random.default_rng(1)
    gains = rng.uniform(0, 1, 36)
    p = rng.uniform(-1, 1, 36)
    q = rng.uniform(-1, 1, 36)
    print()
    for name, py_fn, cy_fn in [
        ("dcg(36)", lambda: python_kernels.dcg(gains),
         (lambda: compiled_kernels.dcg(gains)) if compiled_kernels else None),
        ("kl(36)", lambda: python_kernels.kl_from_scores(p, q),
         (lambda: compiled_kernels.kl_from_scores(p, q)) if compiled_kernels else None),
    ]:
        py = timeit(py_fn, 20000) * 1e6
        if cy_fn is not None:
            cy = timeit(cy_fn, 20000) * 1e6
            print(f"{name:>22} {py:>10.2f}us {cy:>10.2f}us {py / cy:>8.2f}x")
        else:
            print(f"{name:>22} {py:>10.2f}us")


if __name__ == "__main__":
    main()
