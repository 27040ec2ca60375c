"""Numba vs numpy Monte-Carlo kernels.

Times the BER kernel and the sense-map kernel on both backends, checks that
they return identical results, and prints one row per kernel.

    python benchmarks/bench_backends.py --trials 1000000 --threads 4
"""

import argparse
import time

import numpy as np

from ternary_rram import _accel, _kernels, analysis, device, pcsa, streams


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1_000_000, help="BER trials per weight value")
    ap.add_argument("--points", type=int, default=41, help="sense-map grid points per axis")
    ap.add_argument("--reads", type=int, default=100)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is disabled (TERNARY_RRAM_NUMBA=0 or not installed); nothing to compare")
    _accel.set_threads(args.threads)

    cond = device.get_preset("strong")
    timing = analysis._timing_args(pcsa.default_params(), pcsa.NOMINAL, pcsa.DEFAULT_WINDOW)
    ber_key = np.uint64(streams.derive_key(0, "ber"))
    ber_args = (ber_key, 0, 0, args.trials, cond.lrs_median, cond.lrs_log_sigma,
                cond.hrs_median, cond.hrs_log_sigma, *timing)

    grid = np.geomspace(1e3, 1e6, args.points)
    g_bl, g_blb = (np.ascontiguousarray(a.ravel()) for a in np.meshgrid(grid, grid, indexing="ij"))
    map_key = np.uint64(streams.derive_key(0, "sense-map"))
    map_args = (map_key, g_bl, g_blb, args.reads, *timing)

    cases = [
        (f"ber ({args.trials:,} trials)", _kernels._ber_reads_numba, _kernels._ber_reads_numpy, ber_args),
        (f"sense map ({args.points}x{args.points} x {args.reads} reads)",
         _kernels._map_counts_numba, _kernels._map_counts_numpy, map_args),
    ]
    print(f"threads={args.threads}  best of {args.repeat}")
    print(f"{'kernel':<38}{'numba s':>10}{'numpy s':>10}{'speedup':>9}  identical")
    for name, fast, slow, kargs in cases:
        fast(*kargs)  # compile outside the timed region
        t_fast, a = best_of(lambda: fast(*kargs), args.repeat)
        t_slow, b = best_of(lambda: slow(*kargs), args.repeat)
        print(f"{name:<38}{t_fast:>10.3f}{t_slow:>10.3f}{t_slow / t_fast:>8.1f}x  {np.array_equal(a, b)}")


if __name__ == "__main__":
    main()
