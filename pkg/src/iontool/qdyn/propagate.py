"""Time propagation: Trotter split-operator and the Chebyshev expansion."""
from __future__ import annotations

import warnings
from typing import Callable

import numpy as np

from .._accel import USE_NUMBA, njit
from ..errors import InvalidArgumentError, NormalizationError, TruncationWarning
from .fourier import kinetic_spectrum
from .grid import SpatialGrid

COEFF_CUTOFF = 1e-15
NORM_GROWTH = 1e-8


# ------------------------------------------------------------- Bessel --
@njit
def _miller_kernel(z, n_max, n_start):
    # downward recurrence J_{n-1} = (2n/z) J_n - J_{n+1}, normalised by
    # J_0 + 2 sum_k J_{2k} = 1
    j = np.zeros(n_start + 2)
    j[n_start] = 1e-300
    for n in range(n_start, 0, -1):
        j[n - 1] = 2.0 * n / z * j[n] - j[n + 1]
        if abs(j[n - 1]) > 1e250:
            for k in range(n - 1, n_start + 1):
                j[k] *= 1e-250
    s = j[0]
    for k in range(2, n_start + 1, 2):
        s += 2.0 * j[k]
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        out[n] = j[n] / s
    return out


def _miller_numpy(z, n_max, n_start):
    j = np.zeros(n_start + 2)
    j[n_start] = 1e-300
    for n in range(n_start, 0, -1):
        j[n - 1] = 2.0 * n / z * j[n] - j[n + 1]
        if abs(j[n - 1]) > 1e250:
            j[n - 1:] *= 1e-250
    s = j[0] + 2.0 * j[2:n_start + 1:2].sum()
    return j[: n_max + 1] / s


def bessel_j(n_max: int, z: float, use_numba: bool | None = None) -> np.ndarray:
    """J_0(z) ... J_{n_max}(z) for z >= 0 by Miller's downward recurrence."""
    if z < 0:
        raise InvalidArgumentError("bessel_j needs z >= 0")
    if z == 0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    # start well above both n_max and z so the seeded minimal solution dominates
    n_start = int(max(n_max, z) + 30 + 4 * np.sqrt(max(n_max, z)))
    n_start += n_start % 2
    run = _miller_kernel if (USE_NUMBA if use_numba is None else use_numba) else _miller_numpy
    return run(float(z), int(n_max), n_start)


def chebyshev_coefficients(z: float, n_max: int | None = None) -> np.ndarray:
    """Expansion coefficients a_0 = J_0(z), a_n = 2 (-i)^n J_n(z) of exp(-i z x).

    The default order is ceil(z) + 20, extended until the tail falls below
    1e-15; the returned array is trimmed at that cutoff.  An explicit
    ``n_max`` that is too small triggers a :class:`TruncationWarning` and is
    honoured as given.
    """
    if z < 0:
        raise InvalidArgumentError("chebyshev_coefficients needs z >= 0")
    explicit = n_max is not None
    n = int(n_max) if explicit else int(np.ceil(z)) + 20
    while True:
        J = bessel_j(n + 2, z)
        tail = np.abs(J[-3:]).max() * 2.0
        if tail < COEFF_CUTOFF or explicit:
            break
        n = int(n * 1.25) + 4
    if explicit and tail >= COEFF_CUTOFF:
        warnings.warn(f"Chebyshev series truncated at n = {n} with tail {tail:.2e} for z = {z:.4g}",
                      TruncationWarning, stacklevel=2)
    J = J[: n + 1]
    a = 2.0 * (-1j) ** np.arange(n + 1) * J
    a[0] = J[0]
    big = np.nonzero(np.abs(a) >= COEFF_CUTOFF)[0]
    keep = (big[-1] + 1) if big.size else 1
    return a[:keep]


# ------------------------------------------------------- propagators --
def _potential_at(potential, t):
    return potential(t) if callable(potential) else potential


def propagate_split_operator(psi, grid: SpatialGrid, potential, dt: float, steps: int, m: float = 1.0,
                             hbar: float = 1.0, t0: float = 0.0) -> np.ndarray:
    """Strang splitting exp(-iV dt/2hbar) exp(-iT dt/hbar) exp(-iV dt/2hbar).

    ``potential`` is an array or a callable ``t -> V``; it is evaluated at
    the midpoint of each step.  ``psi`` may carry leading batch axes.
    """
    if dt < 0:
        raise InvalidArgumentError("dt must be non-negative")
    psi = np.array(psi, dtype=complex)
    kin = np.exp(-1j * kinetic_spectrum(grid, m, hbar) * dt / hbar)
    static = not callable(potential)
    if static:
        half = np.exp(-0.5j * np.asarray(potential, dtype=float) * dt / hbar)
    for n in range(steps):
        if not static:
            half = np.exp(-0.5j * np.asarray(potential(t0 + (n + 0.5) * dt), dtype=float) * dt / hbar)
        psi = half * np.fft.ifft(kin * np.fft.fft(half * psi, axis=-1), axis=-1)
    return psi


def chebyshev_step(psi, H_apply: Callable, E_lo: float, E_hi: float, dt: float, hbar: float = 1.0,
                   coeffs: np.ndarray | None = None, t: float = 0.0):
    """One step psi -> exp(-i H dt/hbar) psi for H with spectrum in [E_lo, E_hi].

    With H' = 2(H - E_mid)/(E_hi - E_lo) the polynomials phi_n = T_n(H') psi
    follow phi_{n+1} = 2 H' phi_n - phi_{n-1}, and the (-i)^n factors sit in
    the coefficients.  (Putting -i into the recursion as well would count
    them twice.)
    """
    dE = E_hi - E_lo
    if dE <= 0:
        raise InvalidArgumentError("need E_hi > E_lo")
    Em = 0.5 * (E_hi + E_lo)
    a = chebyshev_coefficients(0.5 * dE * dt / hbar) if coeffs is None else coeffs
    s = 2.0 / dE

    def Hn(v):
        return s * (H_apply(v, t) - Em * v)

    phi0 = psi
    out = a[0] * phi0
    if a.size > 1:
        phi1 = Hn(phi0)
        out = out + a[1] * phi1
        for k in range(2, a.size):
            phi0, phi1 = phi1, 2.0 * Hn(phi1) - phi0
            out = out + a[k] * phi1
    return np.exp(-1j * Em * dt / hbar) * out


def propagate_chebyshev(psi, H_apply: Callable, E_lo: float, E_hi: float, dt: float, steps: int,
                        hbar: float = 1.0, t0: float = 0.0, norm: Callable | None = None) -> np.ndarray:
    """Chebyshev propagation over ``steps`` steps of length ``dt``.

    ``H_apply(psi, t)`` applies the Hamiltonian at the step midpoint (the
    piecewise-constant approximation for time-dependent H).  The norm is
    checked after every step; growth beyond 1 + 1e-8 means the spectrum left
    [E_lo, E_hi] and raises :class:`NormalizationError`.

    Parameters
    ----------
    norm : callable, optional
        ``norm(psi) -> array`` used for the check; default is the Euclidean
        norm of the whole array.
    """
    if dt < 0:
        raise InvalidArgumentError("dt must be non-negative")
    psi = np.array(psi, dtype=complex)
    if dt == 0 or steps == 0:
        return psi
    norm = norm or (lambda v: np.sqrt(np.sum(np.abs(v) ** 2)))
    a = chebyshev_coefficients(0.5 * (E_hi - E_lo) * dt / hbar)
    n0 = norm(psi)
    for n in range(steps):
        psi = chebyshev_step(psi, H_apply, E_lo, E_hi, dt, hbar, a, t0 + (n + 0.5) * dt)
        n1 = norm(psi)
        if np.any(~np.isfinite(n1)) or np.any(n1 > n0 * (1.0 + NORM_GROWTH)):
            raise NormalizationError(
                f"norm grew from {np.max(n0):.12g} to {np.max(n1):.12g} at step {n}: the Hamiltonian spectrum "
                f"lies outside [{E_lo:.6g}, {E_hi:.6g}], check the spectral bounds")
        n0 = n1
    return psi


def grid_hamiltonian(grid: SpatialGrid, potential, m: float = 1.0, hbar: float = 1.0) -> Callable:
    """H_apply(psi, t) for T + V, with ``potential`` an array or a callable of t."""
    kin = kinetic_spectrum(grid, m, hbar)

    def H(psi, t=0.0):
        V = _potential_at(potential, t)
        return np.fft.ifft(kin * np.fft.fft(psi, axis=-1), axis=-1) + V * psi

    return H
