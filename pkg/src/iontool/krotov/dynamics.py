"""Interval propagators used by :class:`ControlProblem`.

Each dynamics object advances a batch of states (S, ...) over one control
interval with the controls held constant, forwards or backwards, and
applies dH/d eps_i.  hbar = 1 throughout.
"""
from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError
from ..qdyn.fourier import kinetic_spectrum
from ..qdyn.grid import SpatialGrid
from ..qdyn.propagate import chebyshev_coefficients, chebyshev_step

BOUND_PAD = 0.05


class MatrixDynamics:
    """H(eps) = H0 + sum_i eps_i H_i on a small Hilbert space, exact exponentials.

    Parameters
    ----------
    H0 : (d, d) array or callable t -> array
    H_controls : sequence of (d, d) Hermitian arrays
    dt : float
    """

    def __init__(self, H0, H_controls, dt: float):
        self.H0 = H0
        self.Hc = [np.asarray(h, dtype=complex) for h in H_controls]
        if not self.Hc:
            raise InvalidArgumentError("need at least one control Hamiltonian")
        self.dt = float(dt)

    def hamiltonian(self, eps, n):
        H0 = self.H0((n + 0.5) * self.dt) if callable(self.H0) else self.H0
        H = np.array(H0, dtype=complex)
        for e, h in zip(eps, self.Hc):
            H = H + e * h
        return H

    def step(self, states, eps, n, backward=False, fraction=1.0):
        E, V = np.linalg.eigh(self.hamiltonian(eps, n))
        tau = -fraction * self.dt if backward else fraction * self.dt
        U = (V * np.exp(-1j * E * tau)) @ V.conj().T
        return states @ U.T

    def apply_dH(self, states, i, eps, n):
        return states @ self.Hc[i].T

    @staticmethod
    def overlap(a, b):
        return np.sum(np.conj(a) * b, axis=-1)


class GridDynamics:
    """H = T + V0(x) + sum_i u_i V_i(x) on a Fourier grid.

    Parameters
    ----------
    grid : SpatialGrid
    V_static : (N,) array
    V_controls : (n_controls, N) array
        Potential per unit control; this is dH/du_i.
    method : {"chebyshev", "split"}
        Interval propagator.  Chebyshev bounds follow the actual potentials
        and are widened on the fly when an updated control leaves them.
    """

    def __init__(self, grid: SpatialGrid, V_static, V_controls, dt: float, m: float = 1.0,
                 method: str = "chebyshev"):
        self.grid = grid
        self.V0 = np.asarray(V_static, dtype=float)
        self.Vc = np.atleast_2d(np.asarray(V_controls, dtype=float))
        if self.V0.shape != (grid.N,) or self.Vc.shape[1] != grid.N:
            raise InvalidArgumentError("potentials must be sampled on the grid")
        if method not in ("chebyshev", "split"):
            raise InvalidArgumentError("method must be 'chebyshev' or 'split'")
        self.dt = float(dt)
        self.m = float(m)
        self.method = method
        self.kin = kinetic_spectrum(grid, m)
        self._range = None
        self._coeffs = {}

    def potential(self, eps) -> np.ndarray:
        return self.V0 + np.asarray(eps, dtype=float) @ self.Vc

    def prepare(self, values):
        V = self.V0[None, :] + np.asarray(values, dtype=float).T @ self.Vc
        self._set_range(float(V.min()), float(V.max()))

    def _set_range(self, lo, hi):
        pad = BOUND_PAD * max(hi - lo, 1.0)
        self._range = (lo - pad, hi + pad)
        self._coeffs = {}

    def bounds(self):
        lo, hi = self._range
        return lo, hi + float(self.kin.max())

    def _coefficients(self, fraction):
        if fraction not in self._coeffs:
            E_lo, E_hi = self.bounds()
            self._coeffs[fraction] = chebyshev_coefficients(0.5 * (E_hi - E_lo) * self.dt * fraction)
        return self._coeffs[fraction]

    def step(self, states, eps, n, backward=False, fraction=1.0):
        V = self.potential(eps)
        tau = fraction * self.dt * (-1.0 if backward else 1.0)
        if self.method == "split":
            half = np.exp(-0.5j * V * tau)
            kin = np.exp(-1j * self.kin * tau)
            return half * np.fft.ifft(kin * np.fft.fft(half * states, axis=-1), axis=-1)
        vlo, vhi = float(V.min()), float(V.max())
        if self._range is None or vlo < self._range[0] or vhi > self._range[1]:
            lo, hi = self._range if self._range is not None else (vlo, vhi)
            self._set_range(min(lo, vlo), max(hi, vhi))
        a = self._coefficients(fraction)
        if backward:
            # exp(+iH tau) has the conjugate coefficients
            a = np.conj(a)
        E_lo, E_hi = self.bounds()
        kin = self.kin

        def H(v, t):
            return np.fft.ifft(kin * np.fft.fft(v, axis=-1), axis=-1) + V * v

        return chebyshev_step(states, H, E_lo, E_hi, tau, 1.0, a)

    def apply_dH(self, states, i, eps, n):
        return self.Vc[i] * states

    def overlap(self, a, b):
        return np.sum(np.conj(a) * b, axis=-1) * self.grid.dx


def two_level_problem(T: float, n_steps: int, detuning: float = 0.0, objective: str = "state"):
    """|0> -> |1> under H = (detuning/2) sz + (eps(t)/2) sx.

    At zero detuning the transfer is complete exactly when the pulse area
    sum eps dt equals pi (mod 2 pi).
    """
    from .core import ControlProblem
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    sz = np.diag([1.0, -1.0])
    dt = T / n_steps
    dyn = MatrixDynamics(0.5 * detuning * sz, [0.5 * sx], dt)
    return ControlProblem(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), dyn, n_steps, dt, objective)
