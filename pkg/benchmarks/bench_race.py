"""Compare the compiled block-race kernel with the pure-Python fallback.

    python benchmarks/bench_race.py --races 200000 --repeat 3
"""

import argparse
import time

import numpy as np

from redlistsim import _kernels
from redlistsim._kernels import race_py


def best_of(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--races", type=int, default=200_000)
    ap.add_argument("--p", type=float, default=0.352)
    ap.add_argument("--threshold", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    def run(kernel):
        return lambda: kernel(np.random.PCG64(args.seed), args.p, args.threshold, args.races)

    print(f"races={args.races} p={args.p} T={args.threshold} seed={args.seed}")
    t_py, counts_py = best_of(run(race_py.race_counts), args.repeat)
    print(f"python    {t_py * 1e3:9.1f} ms  {args.races / t_py:12.0f} races/s  counts={counts_py}")
    if not _kernels.COMPILED:
        print("compiled  (extension not built)")
        return
    t_c, counts_c = best_of(run(_kernels.race_ext.race_counts), args.repeat)
    print(f"compiled  {t_c * 1e3:9.1f} ms  {args.races / t_c:12.0f} races/s  counts={counts_c}")
    print(f"speedup   {t_py / t_c:9.1f}x  identical={counts_c == counts_py}")


if __name__ == "__main__":
    main()
