"""Time the hot kernels under numba and under the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backend modules are imported directly, so no environment flag is
needed. The first numba call (compilation, or loading the on-disk cache) is
excluded by a warm-up run.
"""
import argparse
import math
import time

import numpy as np

from confbound import _kernels_numba as nb
from confbound import _kernels_numpy as npk
from confbound._accel import HAS_NUMBA
from confbound.calibrate import DELTA_FLOOR, DELTA_GRID, GOLDEN_TOL


def _cases(seed=0):
    rng = np.random.default_rng(seed)
    s = rng.normal(size=1000)
    total = math.fsum(s)
    order = npk.greedy_exclusion_order(s, total, s.shape[0] - 2, 0)
    k = 1011
    r1 = rng.uniform(0.5, 3.0, k)
    r2 = rng.uniform(0.5, 3.0, k)
    n1 = rng.integers(50, 1000, k).astype(float)
    n2 = rng.integers(5, 50, k).astype(float)
    dist = rng.uniform(2.0, 15.0, k)
    X = rng.normal(size=(400, 2))
    gram = np.exp(-((X[:, None] - X[None]) ** 2).sum(-1)) + 1.0
    y = np.where(X[:, 0] > 0, 1.0, -1.0)
    perms = np.stack([rng.permutation(400) for _ in range(20)])
    draws = rng.random((200_000, 11))
    return {
        "greedy_exclusion_order (n=1000)": lambda m: m.greedy_exclusion_order(s, total, s.shape[0] - 2, 0),
        "prefix_stats (n=1000)": lambda m: m.prefix_stats(s, order, total),
        "optimize_many (1011 budgets)": lambda m: m.optimize_many(r1, r2, n1, n2, dist, DELTA_GRID, DELTA_FLOOR, GOLDEN_TOL),
        "pegasos_alphas (n=400, 20 epochs)": lambda m: m.pegasos_alphas(gram, y, np.ones(400), perms, 0.01),
        "count_last_is_max (200000x11)": lambda m: m.count_last_is_max(draws),
    }


def _best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAS_NUMBA:
        print("numba is not installed; the numba column runs the same loops as plain Python")
    print(f"{'kernel':40s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speed-up':>9s}")
    for name, call in _cases().items():
        call(nb)
        t_nb = _best_of(lambda: call(nb), args.repeat)
        t_np = _best_of(lambda: call(npk), args.repeat)
        print(f"{name:40s} {1e3 * t_nb:12.2f} {1e3 * t_np:12.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
