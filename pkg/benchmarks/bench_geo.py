"""Compare the compiled distance kernel against the numpy fallback.

Times the two operations that dominate scenario setup: one-to-many
distances and nearest-point scans.  Run after an editable install:

    python benchmarks/bench_geo.py [--sizes 1000,10000,100000] [--repeat 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from twinner._kernels import geo_py

try:
    from twinner._kernels import geo_cy
except ImportError:
    geo_cy = None


def bench_pairwise(impl, lats, lons, repeat: int) -> float:
    out = np.empty(len(lats))
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        impl.pairwise_m(58.87, 9.41, lats, lons, out)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_nearest(impl, lats, lons, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        impl.nearest_index(58.87, 9.41, lats, lons)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="1000,10000,100000")
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if geo_cy is None:
        print("compiled kernel not available; showing numpy fallback only")

    rng = np.random.default_rng(1)
    print(f"{'op':<10} {'n':>8} {'python':>12} {'cython':>12} {'speedup':>8}")
    for n in sizes:
        lats = rng.uniform(58, 60, n)
        lons = rng.uniform(9, 11, n)
        for label, bench in (("pairwise", bench_pairwise), ("nearest", bench_nearest)):
            t_py = bench(geo_py, lats, lons, args.repeat)
            if geo_cy is not None:
                t_cy = bench(geo_cy, lats, lons, args.repeat)
                print(f"{label:<10} {n:>8} {t_py * 1e6:>10.1f}us {t_cy * 1e6:>10.1f}us {t_py / t_cy:>7.1f}x")
            else:
                print(f"{label:<10} {n:>8} {t_py * 1e6:>10.1f}us {'-':>12} {'-':>8}")


if __name__ == "__main__":
    main()
