"""Compare the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run on the same inputs through both backends; the outputs are
checked for equality before timings are reported.
"""
import argparse
import timeit

import numpy as np

from localscale import _pure

try:
    from localscale import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    a = rng.uniform(-1, 1, (3000, 2))
    b = rng.uniform(-1, 1, (2500, 2))
    lo = rng.integers(0, 1000, (20000, 2))
    hi = lo + rng.integers(0, 3, (20000, 2))
    starts = np.sort(rng.uniform(0, 1000, 200000))
    ends = starts + rng.uniform(0, 0.01, len(starts))
    return {
        "directed_hausdorff (3000x2500, 2-D)": ("directed_hausdorff", (a, b)),
        "rasterize_boxes (20000 boxes, 2-D)": ("rasterize_boxes", (lo, hi)),
        "merge_intervals (200000 intervals)": ("merge_intervals", (starts, ends)),
    }


def _same(x, y):
    if isinstance(x, tuple):
        return all(np.array_equal(p, q) for p, q in zip(x, y))
    return np.array_equal(np.asarray(x), np.asarray(y))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; only the fallback is available")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':40s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for label, (name, inputs) in cases(rng).items():
        pure = getattr(_pure, name)
        t_pure = min(timeit.repeat(lambda: pure(*inputs), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{label:40s} {1e3 * t_pure:12.2f} {'-':>12s} {'-':>8s}")
            continue
        fast = getattr(_kernels, name)
        if not _same(pure(*inputs), fast(*inputs)):
            raise SystemExit(f"{name}: backends disagree")
        t_fast = min(timeit.repeat(lambda: fast(*inputs), number=1, repeat=args.repeat))
        print(f"{label:40s} {1e3 * t_pure:12.2f} {1e3 * t_fast:12.2f} {t_pure / t_fast:8.1f}x")


if __name__ == "__main__":
    main()
