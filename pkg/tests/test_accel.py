"""Compiled kernels agree with their numpy counterparts."""
import os
import subprocess
import sys

import numpy as np
import pytest

from iontool._accel import HAVE_NUMBA, backend
from iontool.classint import coulomb_force
from iontool.fieldsolve import evaluate_field, evaluate_potential, influence_matrices, solve_laplace_2d_sor
from iontool.fieldsolve.fdm import _thomas_kernel
from iontool.qdyn import bessel_j, numerov_integrate
from iontool.trapmodel import CA40

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def python_version(f):
    return getattr(f, "py_func", f)


def test_environment_switch_selects_numpy():
    env = dict(os.environ, IONTOOL_NUMBA="0")
    r = subprocess.run([sys.executable, "-c", "from iontool._accel import backend; print(backend())"],
                       env=env, capture_output=True, text=True, check=True)
    assert r.stdout.strip() == "numpy"
    assert backend() in ("numba", "numpy")


def test_thomas(rng):
    n = 200
    a, c = rng.normal(size=n), rng.normal(size=n)
    b = 4 + np.abs(rng.normal(size=n))
    d = rng.normal(size=n)
    assert np.allclose(_thomas_kernel(a, b, c, d), python_version(_thomas_kernel)(a, b, c, d), rtol=1e-14)


@pytest.mark.parametrize("z", [0.1, 12.0, 90.0])
def test_bessel(z):
    assert np.allclose(bessel_j(120, z, use_numba=True), bessel_j(120, z, use_numba=False), rtol=1e-12, atol=1e-300)


def test_coulomb(rng):
    x = rng.normal(size=(7, 3)) * 1e-5
    a = coulomb_force(x, CA40, use_numba=True)
    b = coulomb_force(x, CA40, use_numba=False)
    assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_sor():
    n = 33
    fixed = np.zeros((n, n), dtype=bool)
    vals = np.zeros((n, n))
    vals[0, :] = 1.0
    a = solve_laplace_2d_sor(fixed, vals, omega=1.7, tol=1e-11, use_numba=True)
    b = solve_laplace_2d_sor(fixed, vals, omega=1.7, tol=1e-11, use_numba=False)
    assert np.max(np.abs(a - b)) <= 1e-9


def test_numerov():
    x = np.linspace(-6, 6, 601)
    g = 2 * (0.5 * x ** 2 - 0.7)
    a = numerov_integrate(g, 0.0, 1e-8, x[1] - x[0], use_numba=True)
    b = numerov_integrate(g, 0.0, 1e-8, x[1] - x[0], use_numba=False)
    assert np.allclose(a, b, rtol=1e-12)


def test_influence_matrices(trap):
    geom = trap[0]
    pts = np.vstack([geom.centroids[::97], [[0.0, 0.0, 0.0], [1e-3, 2e-4, -1e-4]]])
    a1, b1 = influence_matrices(geom, pts, use_numba=True)
    a0, b0 = influence_matrices(geom, pts, use_numba=False)
    assert np.allclose(a1, a0, rtol=1e-10, atol=1e-14 * np.abs(a0).max())
    assert np.allclose(b1, b0, rtol=1e-10, atol=1e-14 * np.abs(b0).max())


def test_potential_and_field(trap):
    geom, system, sols = trap
    pts = np.array([[0.0, 0.0, 0.0], [5e-4, 1e-4, -2e-4], [-3e-3, 0.0, 3e-4]])
    for sol in (sols[0], sols):
        assert np.allclose(evaluate_potential(system, sol, pts, use_numba=True),
                           evaluate_potential(system, sol, pts, use_numba=False), rtol=1e-10, atol=1e-15)
    assert np.allclose(evaluate_field(system, sols[2], pts, use_numba=True),
                       evaluate_field(system, sols[2], pts, use_numba=False), rtol=1e-10, atol=1e-12)
