#!/usr/bin/env python3
"""Compare the numba and pure-numpy objective kernels.

Both backends are imported in-process (the env flag only picks the default
dispatch), so one run times both and reports the largest difference
between their outputs.

    python3 benchmarks/bench_kernels.py --m 6 --K 7 --repeat 5
"""

import argparse
import time

import numpy as np

from strsub import kernels
from strsub.adaptive_measurement import am_random_instance
from strsub.task_assignment import ta_random_instance


def best_time(fn, args, repeat):
    fn(*args)  # warm up / compile
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=6, help="alphabet size")
    ap.add_argument("--K", type=int, default=7, help="string length (batch holds m**K rows)")
    ap.add_argument("--n", type=int, default=4, help="subtasks in the task model")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rows = kernels.all_strings(args.m, args.K)
    task = ta_random_instance(args.seed, args.n, args.m, args.K, 0.5, 0.95)
    meas = am_random_instance(args.seed, args.K, args.m)
    inv_var = 1.0 / np.asarray(meas.sigma_sq)
    grid = np.asarray(meas.e_grid)

    cases = [
        ("task_values", kernels.task_values_numpy, kernels.task_values_numba, (rows, task._q)),
        ("measurement_values", kernels.measurement_values_numpy, kernels.measurement_values_numba,
         (rows, inv_var, grid, 1.0 - grid)),
    ]
    print(f"batch: {rows.shape[0]} strings of length {args.K}; numba available: {kernels.HAS_NUMBA}; "
          f"default backend: {kernels.BACKEND}")
    print(f"{'kernel':<20} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>9} {'max |diff|':>11}")
    for name, np_fn, nb_fn, fargs in cases:
        t_np = best_time(np_fn, fargs, args.repeat)
        if not kernels.HAS_NUMBA:
            print(f"{name:<20} {t_np * 1e3:12.3f} {'-':>12} {'-':>9} {'-':>11}")
            continue
        t_nb = best_time(nb_fn, fargs, args.repeat)
        diff = float(np.max(np.abs(np_fn(*fargs) - nb_fn(*fargs))))
        print(f"{name:<20} {t_np * 1e3:12.3f} {t_nb * 1e3:12.3f} {t_np / t_nb:9.2f} {diff:11.2e}")


if __name__ == "__main__":
    main()
