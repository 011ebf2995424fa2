"""Benchmark the compiled polynomial kernels against the numpy fallback.

The kernels dominate the Monte Carlo valuation loop (cubic roots for the
bounce, net crossing, and good-position times of every sampled future),
so this is the speedup the extension buys end to end.

Run:  python benchmarks/bench_kernels.py [--sizes 1000,10000,100000]
"""

import argparse
import time

import numpy as np

from shotvalue._kernels import _poly_np

try:
    from shotvalue._kernels import _poly_cy
except ImportError:
    _poly_cy = None


def time_call(fn, *args, repeats=7):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def realistic_batch(n, rng):
    """Coefficients shaped like arc-1 z rows of sampled futures."""
    c = np.empty((n, 4))
    c[:, 0] = rng.uniform(0.8, 2.9, n)  # impact height
    c[:, 1] = rng.uniform(-1.0, 4.5, n)  # vertical speed
    c[:, 2] = -4.905 + rng.normal(0, 0.05, n)
    c[:, 3] = rng.normal(0, 1e-3, n)  # near-quadratic
    return c


def feature_extraction(n, rng):
    """The composite per-future workload from the valuation loop."""
    from shotvalue.outcome import batch_features
    from shotvalue.encoding import layout_for

    layout = layout_for("one_bounce")
    base = rng.normal(0, 1, (n, layout.dim))
    base[:, layout.arc_block("arc1", "z")] = realistic_batch(n, rng)
    base[:, layout.arc_block("arc1", "y")] = np.column_stack(
        [rng.uniform(-12, -6, n), rng.uniform(14, 24, n), rng.normal(0, 0.2, n), rng.normal(0, 0.02, n)]
    )
    base[:, layout.arc_block("arc2", "z")] = np.column_stack(
        [np.zeros(n), rng.uniform(2, 6, n), np.full(n, -4.905), rng.normal(0, 1e-3, n)]
    )
    return lambda: batch_features(base, layout)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="1000,10000,100000")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(0)

    print(f"{'kernel':<24}{'n':>9}{'numpy (ms)':>13}{'cython (ms)':>13}{'speedup':>9}")
    for n in sizes:
        c = realistic_batch(n, rng)
        t = rng.uniform(0, 1, n)
        rows = [
            ("smallest_root_in", lambda impl: impl.smallest_root_in(c, 0.0, 10.0)),
            ("poly_eval", lambda impl: impl.poly_eval(c, t)),
            ("first_local_max", lambda impl: impl.first_local_max(c)),
        ]
        for name, call in rows:
            t_np = time_call(call, _poly_np)
            if _poly_cy is not None:
                t_cy = time_call(call, _poly_cy)
                print(
                    f"{name:<24}{n:>9}{t_np * 1e3:>13.3f}{t_cy * 1e3:>13.3f}"
                    f"{t_np / t_cy:>9.2f}x"
                )
            else:
                print(f"{name:<24}{n:>9}{t_np * 1e3:>13.3f}{'n/a':>13}{'':>9}")

    # end-to-end feature extraction under whichever backend is active
    import shotvalue._kernels as k

    for n in sizes:
        fn = feature_extraction(n, rng)
        dt = time_call(fn, repeats=3)
        print(f"{'batch_features [' + k.BACKEND + ']':<24}{n:>9}{dt * 1e3:>13.3f}")


if __name__ == "__main__":
    main()
