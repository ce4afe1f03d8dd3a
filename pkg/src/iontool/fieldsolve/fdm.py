"""Finite differences and the 1D hat-function finite element reference solver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._accel import USE_NUMBA, njit
from ..errors import ConvergenceError, InvalidArgumentError


@dataclass
class Grid1D:
    """Nodal values on a uniform 1D grid ``x_i = x0 + i*dx``."""

    x0: float
    dx: float
    n: int
    values: np.ndarray

    def __post_init__(self):
        if self.dx <= 0 or self.n < 2:
            raise InvalidArgumentError("Grid1D needs dx > 0 and n >= 2")

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)


@njit
def _thomas_kernel(a, b, c, d):
    n = b.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    cp[0] = c[0] / b[0]
    dp[0] = d[0] / b[0]
    for i in range(1, n):
        m = b[i] - a[i] * cp[i - 1]
        cp[i] = c[i] / m if i < n - 1 else 0.0
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def thomas(a, b, c, d) -> np.ndarray:
    """Solve a tridiagonal system with the Thomas algorithm.

    Parameters
    ----------
    a : array_like
        Sub-diagonal, ``a[0]`` unused.
    b : array_like
        Diagonal.
    c : array_like
        Super-diagonal, ``c[-1]`` unused.
    d : array_like
        Right-hand side.
    """
    a, b, c, d = (np.ascontiguousarray(v, dtype=float) for v in (a, b, c, d))
    if not (a.shape == b.shape == c.shape == d.shape) or b.ndim != 1:
        raise InvalidArgumentError("thomas: diagonals must be 1D arrays of equal length")
    return _thomas_kernel(a, b, c, d)


def solve_laplace_1d_fdm(u_left: float, u_right: float, n: int, length: float = 1.0) -> Grid1D:
    """Three-point finite-difference solution of Phi'' = 0 with Dirichlet ends."""
    if n < 2:
        raise InvalidArgumentError("need at least two nodes")
    vals = np.empty(n)
    vals[0], vals[-1] = u_left, u_right
    m = n - 2
    if m > 0:
        rhs = np.zeros(m)
        rhs[0] -= u_left
        rhs[-1] -= u_right
        vals[1:-1] = thomas(np.ones(m), -2.0 * np.ones(m), np.ones(m), rhs)
    return Grid1D(0.0, length / (n - 1), n, vals)


def solve_poisson_1d_fem(f, n: int | None = None, length: float = 1.0) -> Grid1D:
    """Hat-function Galerkin solution of Phi'' = F, Phi(0) = Phi(L) = 0.

    Parameters
    ----------
    f : array_like or callable
        Nodal source samples ``F(x_k)`` (length ``n``) or a callable of x.
    n : int, optional
        Node count including both boundary nodes; required when ``f`` is callable.

    Notes
    -----
    Both Phi and F are expanded in the hat basis, giving
    ``-K Phi = M F`` with the stiffness matrix K and the mass matrix M.
    """
    if callable(f):
        if n is None:
            raise InvalidArgumentError("n is required when f is callable")
        x = np.linspace(0.0, length, n)
        fk = np.asarray(f(x), dtype=float) * np.ones(n)
    else:
        fk = np.asarray(f, dtype=float)
        n = fk.size if n is None else n
        if fk.size != n:
            raise InvalidArgumentError("source sample count does not match n")
    if n < 3:
        return Grid1D(0.0, length / max(n - 1, 1), max(n, 2), np.zeros(max(n, 2)))
    h = length / (n - 1)
    load = h / 6.0 * (fk[:-2] + 4.0 * fk[1:-1] + fk[2:])
    m = n - 2
    # stiffness: (1/h) tridiag(-1, 2, -1); equation -K phi = load
    main = np.full(m, -2.0 / h)
    off = np.full(m, 1.0 / h)
    vals = np.zeros(n)
    vals[1:-1] = thomas(off, main, off, load)
    return Grid1D(0.0, h, n, vals)


@njit
def _sor_kernel(phi, fixed, omega, tol, max_iter):
    ny, nx = phi.shape
    for it in range(max_iter):
        res = 0.0
        for color in range(2):
            for i in range(1, ny - 1):
                start = 1 + (i + color + 1) % 2
                for j in range(start, nx - 1, 2):
                    if fixed[i, j]:
                        continue
                    r = 0.25 * (phi[i - 1, j] + phi[i + 1, j] + phi[i, j - 1] + phi[i, j + 1]) - phi[i, j]
                    phi[i, j] += omega * r
                    if abs(r) > res:
                        res = abs(r)
        if res < tol:
            return it + 1, res
    return -1, res


def _sor_numpy(phi, fixed, omega, tol, max_iter):
    ny, nx = phi.shape
    ii, jj = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    interior = np.zeros_like(fixed)
    interior[1:-1, 1:-1] = True
    free = interior & ~fixed
    masks = [free & ((ii + jj) % 2 == 0), free & ((ii + jj) % 2 == 1)]
    res = np.inf
    for it in range(max_iter):
        res = 0.0
        for mask in masks:
            avg = np.zeros_like(phi)
            avg[1:-1, 1:-1] = 0.25 * (phi[:-2, 1:-1] + phi[2:, 1:-1] + phi[1:-1, :-2] + phi[1:-1, 2:])
            r = np.where(mask, avg - phi, 0.0)
            phi += omega * r
            res = max(res, float(np.abs(r).max()))
        if res < tol:
            return it + 1, res
    return -1, res


def solve_laplace_2d_sor(fixed_mask, values, omega: float = 1.8, tol: float = 1e-10,
                         max_iter: int = 100_000, use_numba: bool | None = None):
    """Red-black successive over-relaxation for the 2D Laplace equation.

    Parameters
    ----------
    fixed_mask : array_like of bool, shape (ny, nx)
        True where the potential is prescribed.  The outer frame is always
        treated as fixed.
    values : array_like, shape (ny, nx)
        Prescribed potentials (entries outside the mask are the initial guess).
    omega : float
        Relaxation factor in (0, 2); 1 gives Gauss-Seidel.

    Returns
    -------
    ndarray
        Converged potential.  The update residual (max correction before
        relaxation) is below ``tol``.
    """
    if not 0 < omega < 2:
        raise InvalidArgumentError("omega must lie in (0, 2)")
    phi = np.array(values, dtype=float, copy=True)
    fixed = np.array(fixed_mask, dtype=bool, copy=True)
    fixed[0, :] = fixed[-1, :] = fixed[:, 0] = fixed[:, -1] = True
    kernel = _sor_kernel if (USE_NUMBA if use_numba is None else use_numba) else _sor_numpy
    its, res = kernel(phi, fixed, float(omega), float(tol), int(max_iter))
    if its < 0:
        raise ConvergenceError(f"SOR did not converge in {max_iter} iterations, residual {res:.3e}",
                               residual=res, iterations=max_iter)
    return phi
