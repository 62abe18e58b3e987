"""Benchmark the jitted kernels against their pure-numpy twins.

Runs the exact Euclidean distance transform and the banded TV descent on a
few problem sizes and prints per-call timings for both paths.  Requires
numba (run without FUSIONEDIT_NUMBA=0 so the jitted versions exist).

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from fusionedit import accel

if not accel.HAS_NUMBA:
    raise SystemExit("numba path disabled; unset FUSIONEDIT_NUMBA to benchmark both")


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_edt(rng):
    print("exact Euclidean distance transform (squared)")
    print(f"{'size':>10} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for n in (32, 64, 128, 256):
        sites = (rng.random((n, n)) < 0.1).astype(np.uint8)
        sites[0, 0] = 1
        accel.edt_squared(sites)  # warm the JIT cache
        t_nb = timeit(accel.edt_squared, sites)
        t_np = timeit(accel._edt_sq_numpy, sites)
        a = accel.edt_squared(sites)
        b = accel._edt_sq_numpy(sites)
        assert np.abs(a - b).max() < 1e-9
        print(f"{n:>8}^2 {t_nb * 1e3:>10.3f}ms {t_np * 1e3:>10.3f}ms {t_np / t_nb:>8.1f}x")


def bench_tv(rng):
    print("\nbanded TV descent (lam=50, 200 iterations cap)")
    print(f"{'size':>10} {'band':>7} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for n in (32, 64, 128):
        x = rng.standard_normal((4, n, n))
        band = (rng.random((n, n)) < 0.3).astype(np.float64)
        x_hat = x.copy()
        losses = np.empty(201)

        def run_nb():
            accel.tv_descend(x.copy(), x_hat, band, 50.0, 1.0 / 108.0, 200, 1e-12, losses)

        def run_np():
            accel._tv_descend_numpy(x.copy(), x_hat, band, 50.0, 1.0 / 108.0, 200,
                                    1e-12, losses)

        run_nb()  # warm the JIT cache
        t_nb = timeit(run_nb)
        t_np = timeit(run_np)
        print(f"{n:>8}^2 {int(band.sum()):>7} {t_nb * 1e3:>10.3f}ms "
              f"{t_np * 1e3:>10.3f}ms {t_np / t_nb:>8.1f}x")


def main():
    rng = np.random.default_rng(0)
    bench_edt(rng)
    bench_tv(rng)


if __name__ == "__main__":
    main()
