"""Time each compiled kernel against its numpy counterpart.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  The first call
of every numba kernel is done once before timing so compilation is excluded.
"""
import argparse
import time

import numpy as np

from iontool._accel import HAVE_NUMBA
from iontool.classint import coulomb_force
from iontool.fieldsolve import five_segment_trap, influence_matrices, solve_laplace_2d_sor
from iontool.fieldsolve.fdm import _thomas_kernel
from iontool.qdyn import bessel_j, numerov_integrate
from iontool.trapmodel import CA40


def best_of(f, repeat):
    f()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        f()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    geom = five_segment_trap()
    pts = geom.centroids[::4]
    ions = rng.normal(size=(50, 3)) * 1e-5
    n = 2000
    a, c, d = rng.normal(size=n), rng.normal(size=n), rng.normal(size=n)
    b = 4 + np.abs(rng.normal(size=n))
    x = np.linspace(-8, 8, 20001)
    g = 2 * (0.5 * x ** 2 - 0.5)
    m = 65
    fixed = np.zeros((m, m), dtype=bool)
    vals = np.zeros((m, m))
    vals[0, :] = 1.0
    thomas_py = getattr(_thomas_kernel, "py_func", _thomas_kernel)
    return {
        "bem influence": lambda nb: influence_matrices(geom, pts, use_numba=nb),
        "coulomb (50 ions)": lambda nb: coulomb_force(ions, CA40, use_numba=nb),
        "bessel (n=2000)": lambda nb: bessel_j(2000, 800.0, use_numba=nb),
        "numerov (20001 pts)": lambda nb: numerov_integrate(g, 0.0, 1e-8, x[1] - x[0], use_numba=nb),
        "sor (65x65)": lambda nb: solve_laplace_2d_sor(fixed, vals, omega=1.9, tol=1e-9, use_numba=nb),
        "thomas (n=2000)": lambda nb: (_thomas_kernel if nb else thomas_py)(a, b, c, d),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<22}{'numba (ms)':>12}{'numpy (ms)':>12}{'speed-up':>10}")
    for name, f in cases().items():
        t1 = best_of(lambda: f(True), args.repeat)
        t0 = best_of(lambda: f(False), args.repeat)
        print(f"{name:<22}{1e3 * t1:>12.3f}{1e3 * t0:>12.3f}{t0 / t1:>10.1f}")


if __name__ == "__main__":
    main()
