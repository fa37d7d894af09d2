#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallbacks.

Runs each hot kernel on representative workloads with both backends and
prints a timing table.  The compiled extension must be built (pip install
-e .) for the comparison; otherwise only the fallback column appears.
"""

import math
import time

import numpy as np

from hspredict.backend import get_backends
from hspredict.hierarchical import _shrink_t_grid


def _time(fn, *args, repeat=5):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    rng = np.random.default_rng(0)
    n, L, tau, r = 500, 300, 0.05, 1.0
    y = np.ascontiguousarray(rng.standard_normal(n) * 3)
    yt = np.ascontiguousarray(rng.standard_normal(n) * 3)
    t_grid = _shrink_t_grid(tau)
    expo = np.exp(-np.outer(0.5 * y * y, 1.0 - t_grid * t_grid))
    u = rng.random((n, L))
    z = np.ascontiguousarray(rng.standard_normal(n))
    u1 = np.ascontiguousarray(rng.random(n))

    samples = np.ascontiguousarray(rng.standard_normal((2000, 64)))
    point = np.ascontiguousarray(rng.standard_normal(64))
    pairs = rng.integers(0, 2000, size=(2, 2000)).astype(np.int64)

    return [
        ("predictive_log_inner (n=500, L=300)",
         lambda impl: impl.predictive_log_inner(y, yt, tau, r, t_grid, expo, u)),
        ("sample_conjugate_draws (n=500)",
         lambda impl: impl.sample_conjugate_draws(y, tau, r, t_grid, expo, u1, z)),
        ("mean_dist_to_point (2000x64)",
         lambda impl: impl.mean_dist_to_point(samples, point)),
        ("mean_pairwise_dist (2000x64)",
         lambda impl: impl.mean_pairwise_dist(samples)),
        ("mean_pairwise_dist_pairs (2000 pairs)",
         lambda impl: impl.mean_pairwise_dist_pairs(
             samples, np.ascontiguousarray(pairs[0]), np.ascontiguousarray(pairs[1]))),
    ]


def main():
    backends = get_backends()
    rows = []
    for name, call in workloads():
        row = {"kernel": name}
        for label in ("python", "c"):
            impl = backends[label]
            if impl is None:
                row[label] = None
                continue
            row[label] = _time(lambda: call(impl))
        rows.append(row)

    width = max(len(r["kernel"]) for r in rows) + 2
    print(f"{'kernel':<{width}}{'numpy':>12}{'compiled':>12}{'speedup':>10}")
    for r in rows:
        py = r["python"]
        cc = r["c"]
        cc_s = f"{cc * 1e3:9.2f}ms" if cc is not None else "   (n/a)"
        ratio = f"{py / cc:9.1f}x" if cc else ""
        print(f"{r['kernel']:<{width}}{py * 1e3:9.2f}ms{cc_s:>12}{ratio:>10}")


if __name__ == "__main__":
    main()
