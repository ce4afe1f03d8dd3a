"""Uniform position grids with their matched FFT momentum grids."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError, NormalizationError


def optimal_grid_points(V_max: float, L: float, m: float = 1.0, beta: float = 0.9, hbar: float = 1.0) -> int:
    """Grid size at which the largest kinetic energy equals ``V_max``.

    N_opt = L sqrt(2 m V_max) / (beta pi hbar), rounded up.
    """
    if V_max <= 0 or L <= 0 or m <= 0 or not 0 < beta <= 1:
        raise InvalidArgumentError("optimal_grid_points needs positive V_max, L, m and 0 < beta <= 1")
    val = L * np.sqrt(2.0 * m * V_max) / (beta * np.pi * hbar)
    # guard against 64.00000000000001 -> 65
    return int(np.ceil(val * (1.0 - 1e-12)))


@dataclass(frozen=True)
class SpatialGrid:
    """N points x_j = x_min + j dx, dx = L/N, on a periodic box of length L.

    Parameters
    ----------
    L : float
        Box length.
    N : int
        Number of points (even).
    x_min : float
        Position of the first point.
    beta : float
        Safety factor: wavenumbers up to ``K = beta pi / dx`` are treated as
        resolved.  The FFT grid itself extends to ``k_max = pi / dx``.
    """

    L: float
    N: int
    x_min: float = 0.0
    beta: float = 0.9

    def __post_init__(self):
        if self.L <= 0:
            raise InvalidArgumentError("grid length must be positive")
        if self.N < 2 or self.N % 2:
            raise InvalidArgumentError("grid size N must be even and >= 2")
        if not 0 < self.beta <= 1:
            raise InvalidArgumentError("beta must lie in (0, 1]")

    @classmethod
    def centered(cls, L: float, N: int, center: float = 0.0, beta: float = 0.9) -> "SpatialGrid":
        return cls(L, N, center - L / 2, beta)

    @classmethod
    def for_potential(cls, L: float, V_max: float, m: float = 1.0, center: float = 0.0, beta: float = 0.9,
                      hbar: float = 1.0) -> "SpatialGrid":
        """Centred grid with N = N_opt (rounded up to even)."""
        n = optimal_grid_points(V_max, L, m, beta, hbar)
        n += n % 2
        return cls.centered(L, n, center, beta)

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.N)

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / self.L

    @property
    def k_max(self) -> float:
        """Largest wavenumber of the FFT grid, pi/dx."""
        return np.pi / self.dx

    @property
    def K(self) -> float:
        """Largest resolved wavenumber beta*pi/dx."""
        return self.beta * np.pi / self.dx

    @property
    def k(self) -> np.ndarray:
        """Wavenumbers in FFT order: 0, dk, ..., (N/2) dk, -(N/2-1) dk, ..., -dk."""
        n = np.fft.fftfreq(self.N, d=1.0 / self.N)
        n[self.N // 2] = self.N // 2  # the Nyquist bin belongs to +K
        return n * self.dk

    def inner(self, a, b):
        """<a|b> = sum conj(a) b dx over the last axis."""
        return np.sum(np.conj(a) * b, axis=-1) * self.dx

    def norm(self, psi) -> np.ndarray:
        return np.sqrt(np.real(self.inner(psi, psi)))


@dataclass
class WaveFunction:
    """Complex amplitudes on a grid."""

    amplitudes: np.ndarray
    grid: SpatialGrid

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape[-1] != self.grid.N:
            raise InvalidArgumentError("amplitudes do not match the grid size")

    @property
    def norm(self) -> float:
        # all components together, e.g. both spinor halves
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx))

    def normalized(self) -> "WaveFunction":
        n = self.norm
        if not np.isfinite(n) or n == 0:
            raise NormalizationError("cannot normalise a zero or non-finite state")
        return WaveFunction(self.amplitudes / n, self.grid)

    def overlap(self, other: "WaveFunction") -> complex:
        return complex(np.sum(np.conj(self.amplitudes) * other.amplitudes) * self.grid.dx)

    def expectation_x(self) -> float:
        p = np.abs(self.amplitudes) ** 2
        return float(np.sum(p * self.grid.x) * self.grid.dx / (np.sum(p) * self.grid.dx))


def normalize(psi, grid: SpatialGrid) -> np.ndarray:
    """Normalise the last axis of ``psi`` (works on batches)."""
    n = grid.norm(psi)
    if np.any(~np.isfinite(n)) or np.any(n == 0):
        raise NormalizationError("cannot normalise a zero or non-finite state")
    return psi / np.asarray(n)[..., None]


def gaussian(grid: SpatialGrid, x0: float = 0.0, sigma: float = np.sqrt(0.5), k0: float = 0.0) -> np.ndarray:
    """Normalised Gaussian packet with position spread ``sigma`` (std of |psi|^2)."""
    x = grid.x
    psi = np.exp(-((x - x0) ** 2) / (4 * sigma ** 2) + 1j * k0 * x)
    return normalize(psi, grid)


def harmonic_ground_state(grid: SpatialGrid, x0: float = 0.0, m: float = 1.0, omega: float = 1.0,
                          hbar: float = 1.0) -> np.ndarray:
    """Analytic oscillator ground state centred at ``x0``."""
    return gaussian(grid, x0, np.sqrt(hbar / (2 * m * omega)))
