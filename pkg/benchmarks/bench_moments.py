"""Benchmark the compiled sliding-window moment kernel against the numpy
fallback.

Usage:
    python benchmarks/bench_moments.py [--repeats N]

The kernel dominates feature-map extraction, which in turn dominates
training and model-based compression.
"""

import argparse
import time

import numpy as np

from usqz import _moments_py

try:
    from usqz import _moments
except ImportError:
    _moments = None


def bench(fn, amp, window, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(amp, window)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print("%-12s %-8s %-12s %-12s %s" % ("shape", "window", "compiled",
                                         "numpy", "speedup"))
    for shape in ((96, 64), (384, 256), (768, 512)):
        amp = np.ascontiguousarray(rng.random(shape))
        for window in (5, 9, 15):
            t_py = bench(_moments_py.window_moment_sums, amp, window,
                         args.repeats)
            if _moments is None:
                print("%-12s %-8d %-12s %.4f s     n/a (compiled kernel not built)"
                      % (str(shape), window, "-", t_py))
                continue
            t_c = bench(_moments.window_moment_sums, amp, window, args.repeats)
            ours = _moments.window_moment_sums(amp, window)
            ref = _moments_py.window_moment_sums(amp, window)
            assert all(np.allclose(a, b, rtol=1e-12) for a, b in zip(ours, ref))
            print("%-12s %-8d %-10.4f s %-10.4f s %.1fx"
                  % (str(shape), window, t_c, t_py, t_py / t_c))


if __name__ == "__main__":
    main()
