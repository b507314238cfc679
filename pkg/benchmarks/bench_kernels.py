"""Time the compiled and pure-Python noncrossing-partition kernels.

    python3 benchmarks/bench_kernels.py [--max-n 12] [--repeat 3]
"""

import argparse
import time

import numpy as np

from amalgam import _kernels_py, ncpart

try:
    from amalgam import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--min-n", type=int, default=8)
    ap.add_argument("--max-n", type=int, default=12)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'n':>3} {'count':>8} {'kernel':>8} {'enum py':>10} {'enum c':>10} {'speedup':>8} "
          f"{'mask py':>10} {'mask c':>10} {'speedup':>8}")
    for n in range(args.min_n, args.max_n + 1):
        tp, lab = best_of(lambda: _kernels_py.nc_labels(n), args.repeat)
        lab = np.asarray(lab, dtype=np.int64)
        colors = np.arange(n, dtype=np.int64) % 2
        mp, _ = best_of(lambda: (_kernels_py.noncrossing_mask(lab), _kernels_py.monochrome_mask(lab, colors)),
                        args.repeat)
        assert len(lab) == ncpart.catalan(n)
        if _kernels is None:
            print(f"{n:>3} {len(lab):>8} {'python':>8} {tp:>10.4f} {'-':>10} {'-':>8} {mp:>10.4f}")
            continue
        tc, labc = best_of(lambda: _kernels.nc_labels(n), args.repeat)
        mc, _ = best_of(lambda: (_kernels.noncrossing_mask(lab), _kernels.monochrome_mask(lab, colors)),
                        args.repeat)
        assert {tuple(r) for r in np.asarray(labc)} == {tuple(r) for r in lab}
        print(f"{n:>3} {len(lab):>8} {'both':>8} {tp:>10.4f} {tc:>10.4f} {tp / tc:>7.1f}x "
              f"{mp:>10.4f} {mc:>10.4f} {mp / mc:>7.1f}x")


if __name__ == "__main__":
    main()
