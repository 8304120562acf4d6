#!/usr/bin/env python
"""Time the Monte Carlo kernels with numba against their numpy fallbacks.

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --trials 200000 --n 100 --repeat 5
    python benchmarks/bench_kernels.py --output bench.json
"""

import argparse
import json
import time

import numpy as np

from qensembles import kernels
from qensembles._accel import NUMBA_AVAILABLE


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--n", type=int, default=100, help="photons per trial")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--output", help="write timings as JSON")
    args = parser.parse_args()

    if not NUMBA_AVAILABLE:
        raise SystemExit("numba is not importable; nothing to compare")

    key = kernels.derive_key(1)
    base = np.repeat([0, 1], args.n // 2)
    p_zero = np.array([0.5, 0.5])
    rows = args.trials

    # compile outside the timed region
    kernels.hash_uniforms_nb(key, 0, 0, 2, 2)
    kernels.shuffled_rows_nb(key, 0, 0, 2, base)
    kernels.born_zero_counts_nb(key, 0, 0, np.zeros((2, 2), dtype=np.int64), p_zero)

    cases = {
        "hash_uniforms": (
            lambda: kernels.hash_uniforms_nb(key, 0, 0, rows, args.n),
            lambda: kernels.hash_uniforms_np(key, 0, 0, rows, args.n),
        ),
        "shuffled_rows": (
            lambda: kernels.shuffled_rows_nb(key, 1, 0, rows, base),
            lambda: kernels.shuffled_rows_np(key, 1, 0, rows, base),
        ),
    }
    idx = kernels.shuffled_rows_np(key, 1, 0, rows, base)
    cases["born_zero_counts"] = (
        lambda: kernels.born_zero_counts_nb(key, 2, 0, idx, p_zero),
        lambda: kernels.born_zero_counts_np(key, 2, 0, idx, p_zero),
    )

    results = {}
    print(f"{'kernel':<18}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}  identical")
    for name, (nb, np_) in cases.items():
        t_nb, r_nb = best_of(nb, args.repeat)
        t_np, r_np = best_of(np_, args.repeat)
        same = bool(np.array_equal(r_nb, r_np))
        results[name] = {"numba": t_nb, "numpy": t_np, "speedup": t_np / t_nb, "identical": same}
        print(f"{name:<18}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>10.1f}  {same}")

    if args.output:
        with open(args.output, "w") as fh:
            json.dump({"trials": rows, "n": args.n, "results": results}, fh, indent=2)


if __name__ == "__main__":
    main()
