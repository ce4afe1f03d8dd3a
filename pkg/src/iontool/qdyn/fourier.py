"""Fourier-grid Hamiltonian: FFT kinetic operator, explicit matrix, eigenstates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..errors import InvalidArgumentError
from .grid import SpatialGrid

BOUND_MARGIN = 0.01


def kinetic_spectrum(grid: SpatialGrid, m: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    """hbar^2 k^2 / 2m in FFT order."""
    return hbar ** 2 * grid.k ** 2 / (2.0 * m)


def apply_kinetic(psi, grid: SpatialGrid, m: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    """T psi by forward FFT, multiplication with hbar^2 k^2/2m, inverse FFT (last axis)."""
    psi = np.asarray(psi)
    if psi.shape[-1] != grid.N:
        raise InvalidArgumentError("state does not match the grid")
    return np.fft.ifft(kinetic_spectrum(grid, m, hbar) * np.fft.fft(psi, axis=-1), axis=-1)


def kinetic_matrix(grid: SpatialGrid, m: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    """Explicit position-space kinetic matrix with K = pi/dx.

    Diagonal (hbar^2/2m) K^2/3 (1 + 2/N^2); off-diagonal
    (hbar^2/2m) (2K^2/N^2) (-1)^(j-l) / sin^2(pi (j-l)/N).
    """
    N = grid.N
    K = grid.k_max
    d = np.arange(N)[None, :] - np.arange(N)[:, None]
    pref = hbar ** 2 / (2.0 * m)
    with np.errstate(divide="ignore"):
        off = pref * 2.0 * K ** 2 / N ** 2 * np.where(d % 2 == 0, 1.0, -1.0) / np.sin(np.pi * d / N) ** 2
    T = np.where(d == 0, pref * K ** 2 / 3.0 * (1.0 + 2.0 / N ** 2), off)
    return 0.5 * (T + T.T)


def hamiltonian_matrix(grid: SpatialGrid, potential, m: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    """Dense Hamiltonian T + diag(V)."""
    V = np.asarray(potential, dtype=float)
    if V.shape != (grid.N,):
        raise InvalidArgumentError("potential must be sampled on the grid")
    H = kinetic_matrix(grid, m, hbar)
    H[np.diag_indices_from(H)] += V
    return H


@dataclass
class EigenSolution:
    """Ascending energies and column eigenvectors normalised with the grid measure."""

    energies: np.ndarray
    vectors: np.ndarray
    grid: SpatialGrid

    def state(self, n: int) -> np.ndarray:
        return self.vectors[:, n]


def eigenstates(grid: SpatialGrid, potential, m: float = 1.0, hbar: float = 1.0, n_states: int | None = None
                ) -> EigenSolution:
    """Diagonalise the Fourier-grid Hamiltonian.

    Eigenvectors are scaled so that sum |psi|^2 dx = 1 and the largest
    component is positive.
    """
    H = hamiltonian_matrix(grid, potential, m, hbar)
    sel = None if n_states is None else (0, min(n_states, grid.N) - 1)
    E, vec = scipy.linalg.eigh(H, subset_by_index=sel, driver="evr")
    vec = vec / np.sqrt(grid.dx)
    sign = np.sign(vec[np.argmax(np.abs(vec), axis=0), np.arange(vec.shape[1])])
    return EigenSolution(E, vec * sign, grid)


@dataclass
class GridHamiltonian:
    """H = T + V(t) on a grid; ``potential`` is an array or a callable t -> array."""

    grid: SpatialGrid
    potential: object
    m: float = 1.0
    hbar: float = 1.0

    def V(self, t: float = 0.0) -> np.ndarray:
        return np.asarray(self.potential(t) if callable(self.potential) else self.potential, dtype=float)

    @property
    def kinetic(self) -> np.ndarray:
        return kinetic_spectrum(self.grid, self.m, self.hbar)

    def apply(self, psi, t: float = 0.0):
        return apply_kinetic(psi, self.grid, self.m, self.hbar) + self.V(t) * psi

    def bounds(self, potentials=None):
        return spectral_bounds(self.grid, self.V() if potentials is None else potentials, self.m, self.hbar)


def spectral_bounds(grid: SpatialGrid, potential, m: float = 1.0, hbar: float = 1.0, margin: float = BOUND_MARGIN):
    """Rigorous bounds (E_lo, E_hi) on the grid Hamiltonian spectrum.

    ``potential`` may be one sample array or a family (..., N); bounds are
    taken over all of it.  E_lo = min V, E_hi = max V + hbar^2 k_max^2/2m,
    then E_hi is raised by ``margin`` times the range.
    """
    V = np.asarray(potential, dtype=float)
    lo = float(V.min())
    hi = float(V.max()) + hbar ** 2 * grid.k_max ** 2 / (2.0 * m)
    return lo, hi + margin * (hi - lo)
