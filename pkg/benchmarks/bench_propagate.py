"""Time the compiled and numpy propagation kernels on a Monte Carlo-sized batch.

Usage: python3 benchmarks/bench_propagate.py [--n 2000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from cprobust import kernels
from cprobust.mcsim import default_dt, refine
from cprobust.pulses import build_sequence


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000, help="realizations per batch")
    parser.add_argument("--sequence", default="CinBB")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    seq = build_sequence(args.sequence, np.pi, 1.5e6)
    grid = refine(seq, default_dt(seq))
    rng = np.random.default_rng(0)
    beta_a = 1e4 * rng.standard_normal((args.n, len(grid)))
    beta_d = 1e4 * rng.standard_normal((args.n, len(grid)))
    call_args = (grid.amplitude, grid.phase, grid.dt, beta_a, beta_d)

    backends = ["python"] + (["compiled"] if kernels.BACKEND == "compiled" else [])
    results = {}
    for backend in backends:
        timer = timeit.Timer(lambda: kernels.propagate_batch(*call_args, backend=backend))
        results[backend] = min(timer.repeat(args.repeat, 1))
        print(f"{backend:>9}: {results[backend] * 1e3:8.2f} ms for {args.n} x {len(grid)} steps")
    if len(results) == 2:
        q_py = kernels.propagate_batch(*call_args, backend="python")
        q_c = kernels.propagate_batch(*call_args, backend="compiled")
        print(f"  speedup: {results['python'] / results['compiled']:.1f}x, "
              f"max |difference| {np.max(np.abs(q_py - q_c)):.2e}")
    else:
        print("compiled kernel not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
