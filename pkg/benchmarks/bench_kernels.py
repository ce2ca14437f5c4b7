"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5] [--threads 1]

Both paths are called directly from ``hybridwind._kernels``, so one process
covers both backends. JIT compilation is excluded by a warm-up call. The
script also checks that each pair of outputs agrees before timing.
"""
import argparse
import time

import numpy as np

from hybridwind import _accel
from hybridwind import _kernels as K
from hybridwind.filter import build_sequence


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    for n_pi, points in ((8, 20_000), (256, 20_000), (4096, 2_000)):
        seg = build_sequence("cpmg", 1.0, n_pi).segments()
        omega = np.linspace(0.0, 4 * np.pi * n_pi, points)
        yield (f"segment_transform N={n_pi} grid={points}",
               lambda o=omega, s=seg: K.segment_transform_numpy(o, *s),
               lambda o=omega, s=seg: K.segment_transform_numba(o, *s))
    rng = np.random.default_rng(0)
    for n in (100_000, 2_000_000):
        starts = np.concatenate(([-1.0], np.sort(rng.uniform(0, n * 1e-3, 200))))
        phases = rng.uniform(0, 2 * np.pi, starts.size)
        yield (f"renewal_carrier n={n}",
               lambda n=n, s=starts, p=phases: K.renewal_carrier_numpy(0.0, 1e-3, n, 15.2, s, p, True),
               lambda n=n, s=starts, p=phases: K.renewal_carrier_numba(0.0, 1e-3, n, 15.2, s, p, True))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is unavailable or disabled; nothing to compare")
    _accel.set_threads(args.threads)
    print(f"{'kernel':44s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, f_np, f_nb in cases():
        a, b = f_np(), f_nb()  # warm-up and JIT
        if not np.allclose(a, b, rtol=1e-9, atol=1e-12 * np.abs(a).max()):
            raise SystemExit(f"{name}: backends disagree")
        t_np, t_nb = best_of(f_np, args.repeat), best_of(f_nb, args.repeat)
        print(f"{name:44s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
