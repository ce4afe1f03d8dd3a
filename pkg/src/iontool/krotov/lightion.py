"""Light-ion coupling on a grid and the sideband phase gate.

Units: hbar = m = omega_tr = 1, so lengths are in sqrt(hbar/(m omega_tr))
and times in 1/omega_tr.  Spinors have shape (..., 2, N) with component 0
the lower qubit state |dn> and component 1 the upper state |up>.

In the interaction picture with respect to the qubit energy the coupling is

    (Omega/2) [ |up><dn| exp(i(k x - delta t - phi)) + h.c. ].

Moving |up> into the frame rotating with the laser removes the explicit
time dependence and adds -delta |up><up|.  In that frame the Hamiltonian
depends on the laser phase only through H(phi) = D(phi) H(0) D(phi)^+,
D = diag(1, exp(-i phi)), so one eigendecomposition of H(0) gives exact
propagators for every phase and duration.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError, NormalizationError
from ..qdyn.fourier import eigenstates, hamiltonian_matrix, kinetic_spectrum
from ..qdyn.grid import SpatialGrid
from ..qdyn.propagate import chebyshev_coefficients, chebyshev_step
from .core import ControlProblem, ControlSet

# phase-gate truth table on |dn,0>, |up,0>, |dn,1>, |up,1>
GATE_LABELS = ("dn,0", "up,0", "dn,1", "up,1")
GATE_SIGNS = np.array([-1.0, 1.0, -1.0, -1.0])
_BASIS = ((0, 0), (1, 0), (0, 1), (1, 1))  # (internal, motional)


@dataclass
class SpinorWaveFunction:
    """Lower and upper internal-state components on one grid."""

    amplitudes: np.ndarray
    grid: SpatialGrid

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (2, self.grid.N):
            raise InvalidArgumentError("spinor amplitudes must have shape (2, N)")
        self.amplitudes = a

    @classmethod
    def from_components(cls, down, up, grid):
        return cls(np.stack([np.asarray(down, complex), np.asarray(up, complex)]), grid)

    @property
    def down(self) -> np.ndarray:
        return self.amplitudes[0]

    @property
    def up(self) -> np.ndarray:
        return self.amplitudes[1]

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx))

    def populations(self):
        """(P_dn, P_up)."""
        p = np.sum(np.abs(self.amplitudes) ** 2, axis=-1) * self.grid.dx
        return float(p[0]), float(p[1])

    def normalized(self) -> "SpinorWaveFunction":
        n = self.norm
        if not np.isfinite(n) or n == 0:
            raise NormalizationError("cannot normalise a zero spinor")
        return SpinorWaveFunction(self.amplitudes / n, self.grid)


def lamb_dicke_wavenumber(eta: float, m: float = 1.0, omega: float = 1.0, hbar: float = 1.0) -> float:
    """Projected wavenumber k = eta / sqrt(hbar/(2 m omega)).

    With this convention the first sideband matrix element is
    |<1|exp(ikx)|0>| = eta exp(-eta^2/2).
    """
    return float(eta / np.sqrt(hbar / (2.0 * m * omega)))


def light_ion_apply(psi, grid: SpatialGrid, Omega: float, eta: float, delta: float, phi: float, t: float):
    """Apply the coupling term (Omega/2)[|up><dn| e^{i(kx - delta t - phi)} + h.c.].

    ``psi`` has shape (..., 2, N); the motional Hamiltonian is not included.
    """
    psi = np.asarray(psi)
    k = lamb_dicke_wavenumber(eta)
    w = 0.5 * Omega * np.exp(1j * (k * grid.x - delta * t - phi))
    out = np.empty(np.broadcast(psi, psi).shape, dtype=complex)
    out[..., 1, :] = w * psi[..., 0, :]
    out[..., 0, :] = np.conj(w) * psi[..., 1, :]
    return out


def light_ion_hamiltonian(grid: SpatialGrid, potential, Omega: float, eta: float, delta: float, phase=0.0):
    """H_apply(psi, t) for the full interaction-picture Hamiltonian on spinors.

    ``phase`` is a constant or a callable t -> phi.
    """
    kin = kinetic_spectrum(grid)
    V = np.asarray(potential, dtype=float)

    def H(psi, t=0.0):
        phi = phase(t) if callable(phase) else phase
        h0 = np.fft.ifft(kin * np.fft.fft(psi, axis=-1), axis=-1) + V * psi
        return h0 + light_ion_apply(psi, grid, Omega, eta, delta, phi, t)

    return H


def light_ion_bounds(grid: SpatialGrid, potential, Omega: float, shift: float = 0.0, margin: float = 0.01):
    """Spectral bounds for the spinor Hamiltonian; ``shift`` is an extra diagonal term on |up>."""
    V = np.asarray(potential, dtype=float)
    lo = float(V.min()) + min(0.0, shift) - 0.5 * abs(Omega)
    hi = float(V.max()) + float(kinetic_spectrum(grid).max()) + max(0.0, shift) + 0.5 * abs(Omega)
    return lo, hi + margin * (hi - lo)


def pi_half_pulse_map(spinor, optical_phase: float = 0.0):
    """Ideal resonant pi/2 rotation of the internal state.

    |dn> -> (|dn> + e^{i phi}|up>)/sqrt2, |up> -> (-e^{-i phi}|dn> + |up>)/sqrt2.
    This is the carrier propagator at pulse area pi/2 for the laser phase
    -phi - pi/2 in the coupling convention above.  Accepts arrays (..., 2, N)
    or (..., 2) and :class:`SpinorWaveFunction`.
    """
    if isinstance(spinor, SpinorWaveFunction):
        return SpinorWaveFunction(pi_half_pulse_map(spinor.amplitudes, optical_phase), spinor.grid)
    psi = np.asarray(spinor, dtype=complex)
    c = s = 1.0 / np.sqrt(2.0)
    e = np.exp(1j * optical_phase)
    ax = -2 if psi.ndim >= 2 and psi.shape[-2] == 2 else -1
    a0 = np.take(psi, 0, axis=ax)
    a1 = np.take(psi, 1, axis=ax)
    return np.stack([c * a0 - np.conj(e) * s * a1, e * s * a0 + c * a1], axis=ax)


def fock_matrix_elements(vectors, grid: SpatialGrid, k: float) -> np.ndarray:
    """<m|exp(ikx)|n> from grid eigenvectors (columns normalised with dx)."""
    V = np.asarray(vectors)
    return (V.conj().T * np.exp(1j * k * grid.x)) @ V * grid.dx


# --------------------------------------------------------------- gate --
@dataclass
class GateModel:
    """One ion in a harmonic trap driven on the blue sideband.

    Parameters
    ----------
    L, N : float, int
        Grid length (oscillator units) and number of points.
    eta : float
        Lamb-Dicke parameter.
    Omega : float
        Carrier Rabi frequency in units of the trap frequency.
    sideband : int
        Target sideband order; the bare detuning is ``sideband`` trap quanta.
    stark_compensation : bool
        Cancel the off-resonant carrier light shifts by a diagonal
        counter-shift on each internal level (see :attr:`stark_shifts`).
    dt : float
        Control interval in 1/omega_tr.
    propagator : {"exact", "chebyshev"}
    """

    L: float = 16.0
    N: int = 64
    eta: float = 0.1
    Omega: float = 0.1
    sideband: int = 1
    stark_compensation: bool = True
    dt: float = 0.5
    propagator: str = "exact"
    n_fock: int = 12
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.propagator not in ("exact", "chebyshev"):
            raise InvalidArgumentError("propagator must be 'exact' or 'chebyshev'")
        if not (self.Omega > 0 and self.eta >= 0 and self.dt > 0):
            raise InvalidArgumentError("need Omega > 0, eta >= 0, dt > 0")

    @property
    def grid(self) -> SpatialGrid:
        return SpatialGrid.centered(self.L, self.N)

    @property
    def potential(self) -> np.ndarray:
        return 0.5 * self.grid.x ** 2

    @property
    def k(self) -> float:
        return lamb_dicke_wavenumber(self.eta)

    def eigen(self):
        if "eig" not in self._cache:
            self._cache["eig"] = eigenstates(self.grid, self.potential, n_states=self.n_fock)
        return self._cache["eig"]

    @property
    def sideband_rabi(self) -> float:
        """Rabi frequency of |dn,0> <-> |up,1| on the grid."""
        e = self.eigen()
        return float(self.Omega * abs(fock_matrix_elements(e.vectors[:, :2], self.grid, self.k)[1, 0]))

    @property
    def detuning(self) -> float:
        """Laser detuning from the qubit resonance: ``sideband`` trap quanta on the grid."""
        E = self.eigen().energies
        return float(E[self.sideband] - E[0])

    @property
    def stark_shifts(self):
        """Second-order light shifts (s_dn, s_up) of |dn,0> and |up,0>.

        Sums over all couplings except the resonant sideband partner.  With
        ``stark_compensation`` the model adds -s_dn |dn><dn| - s_up |up><up|,
        a counter-shift of the kind produced by an extra off-resonant beam.
        """
        if "stark" in self._cache:
            return self._cache["stark"]
        e = self.eigen()
        E = e.energies
        M = fock_matrix_elements(e.vectors, self.grid, self.k)
        g2 = (0.5 * self.Omega) ** 2
        delta, s = self.detuning, self.sideband
        m = np.arange(E.size)
        # |dn,0> (E_0) couples to |up,m> (E_m - delta); |up,0> to |dn,m> (E_m)
        den_d = np.where(m != s, E[0] - (E - delta), 1.0)
        den_u = np.where(m != s, (E[0] - delta) - E, 1.0)
        sd = g2 * float(np.sum(np.where(m != s, np.abs(M[:, 0]) ** 2 / den_d, 0.0)))
        su = g2 * float(np.sum(np.where(m != s, np.abs(M[0, :]) ** 2 / den_u, 0.0)))
        self._cache["stark"] = (sd, su)
        return sd, su

    @property
    def level_shifts(self):
        """Diagonal terms added to the |dn> and |up> blocks."""
        if not self.stark_compensation:
            return 0.0, 0.0
        sd, su = self.stark_shifts
        return -sd, -su

    def basis_states(self) -> np.ndarray:
        """|dn,0>, |up,0>, |dn,1>, |up,1> as an array (4, 2, N)."""
        e = self.eigen()
        out = np.zeros((4, 2, self.N), dtype=complex)
        for s, (spin, n) in enumerate(_BASIS):
            out[s, spin] = e.vectors[:, n]
        return out

    def targets(self, T: float) -> np.ndarray:
        """Phase-gate goals at time T in the laser frame.

        Interaction-picture goals sign_s exp(-i E_n T)|s>, with the upper
        component rotated by exp(i delta T) into the laser frame.
        """
        E = self.eigen().energies
        out = self.basis_states()
        for s, (spin, n) in enumerate(_BASIS):
            ph = GATE_SIGNS[s] * np.exp(-1j * E[n] * T)
            if spin == 1:
                ph *= np.exp(1j * self.detuning * T)
            out[s] *= ph
        return out

    def dynamics(self) -> "GateDynamics":
        if "dyn" not in self._cache:
            self._cache["dyn"] = GateDynamics(self)
        return self._cache["dyn"]

    def pulse_duration(self, angle: float) -> float:
        """Duration of a sideband rotation by ``angle`` on |dn,0> <-> |up,1>."""
        return float(angle / self.sideband_rabi)

    def problem(self, T: float) -> ControlProblem:
        n = max(1, int(round(T / self.dt)))
        dyn = self.dynamics()
        dyn.set_dt(T / n)
        return ControlProblem(self.basis_states(), self.targets(T), dyn, n, T / n, objective="phase",
                              info={"T": T, "detuning": self.detuning, "sideband_rabi": self.sideband_rabi,
                                    "level_shifts": self.level_shifts})


class GateDynamics:
    """Laser-frame spinor propagation with the sideband phase as the control."""

    def __init__(self, model: GateModel):
        self.model = model
        grid = model.grid
        self.grid = grid
        N = grid.N
        self.delta = model.detuning
        self.half_omega = 0.5 * model.Omega
        self.phase_mask = np.exp(1j * model.k * grid.x)
        Hm = hamiltonian_matrix(grid, model.potential)
        C = np.diag(self.half_omega * self.phase_mask)
        H = np.zeros((2 * N, 2 * N), dtype=complex)
        self.shift_dn, self.shift_up = model.level_shifts
        H[:N, :N] = Hm + self.shift_dn * np.eye(N)
        H[N:, N:] = Hm + (self.shift_up - self.delta) * np.eye(N)
        H[N:, :N] = C
        H[:N, N:] = C.conj().T
        self.E, self.W = np.linalg.eigh(H)
        self.kin = kinetic_spectrum(grid)
        self.V = model.potential
        self.bounds = light_ion_bounds(grid, self.V + min(self.shift_dn, 0.0), model.Omega,
                                       self.shift_up - self.delta - min(self.shift_dn, 0.0))
        lo, hi = self.bounds
        self.bounds = (lo - abs(self.shift_dn), hi + abs(self.shift_dn))
        self.dt = model.dt
        self._coeffs = {}

    def set_dt(self, dt):
        self.dt = float(dt)
        self._coeffs = {}

    def _exact(self, states, phi, tau):
        N = self.grid.N
        sh = states.shape
        v = states.reshape(sh[:-2] + (2 * N,)).copy()
        ph = np.exp(-1j * phi)
        v[..., N:] *= np.conj(ph)
        v = ((v @ self.W.conj()) * np.exp(-1j * self.E * tau)) @ self.W.T
        v[..., N:] *= ph
        return v.reshape(sh)

    def _H(self, phi):
        kin, V = self.kin, self.V
        d_up, d_dn = self.shift_up - self.delta, self.shift_dn
        w = self.half_omega * self.phase_mask * np.exp(-1j * phi)

        def H(psi, t=0.0):
            out = np.fft.ifft(kin * np.fft.fft(psi, axis=-1), axis=-1) + V * psi
            out[..., 1, :] += w * psi[..., 0, :] + d_up * psi[..., 1, :]
            out[..., 0, :] += np.conj(w) * psi[..., 1, :] + d_dn * psi[..., 0, :]
            return out

        return H

    def evolve(self, states, phi: float, duration: float):
        """Propagate over ``duration`` (may be negative) at constant phase."""
        if self.model.propagator == "exact":
            return self._exact(np.asarray(states, dtype=complex), phi, duration)
        n = max(1, int(np.ceil(abs(duration) / self.dt)))
        tau = duration / n
        E_lo, E_hi = self.bounds
        a = chebyshev_coefficients(0.5 * (E_hi - E_lo) * abs(tau))
        if tau < 0:
            a = np.conj(a)
        H = self._H(phi)
        psi = np.asarray(states, dtype=complex)
        for _ in range(n):
            psi = chebyshev_step(psi, H, E_lo, E_hi, tau, 1.0, a)
        return psi

    def step(self, states, eps, n, backward=False, fraction=1.0):
        tau = fraction * self.dt * (-1.0 if backward else 1.0)
        if self.model.propagator == "exact":
            return self._exact(states, float(eps[0]), tau)
        key = fraction
        if key not in self._coeffs:
            E_lo, E_hi = self.bounds
            self._coeffs[key] = chebyshev_coefficients(0.5 * (E_hi - E_lo) * fraction * self.dt)
        a = self._coeffs[key]
        E_lo, E_hi = self.bounds
        return chebyshev_step(states, self._H(float(eps[0])), E_lo, E_hi, tau, 1.0, np.conj(a) if backward else a)

    def apply_dH(self, states, i, eps, n):
        w = self.half_omega * self.phase_mask * np.exp(-1j * float(eps[0]))
        out = np.empty_like(states, dtype=complex)
        out[..., 1, :] = -1j * w * states[..., 0, :]
        out[..., 0, :] = 1j * np.conj(w) * states[..., 1, :]
        return out

    def overlap(self, a, b):
        return np.sum(np.conj(a) * b, axis=(-2, -1)) * self.grid.dx


# ------------------------------------------------------ composite pulse --
def composite_sequence(model: GateModel, rotations):
    """Convert (angle, phase) sideband rotations into (duration, phase) pulses."""
    return [(model.pulse_duration(a), float(p)) for a, p in rotations]


# rotation angles on |dn,0> <-> |up,1>: the sqrt2-faster |dn,1> <-> |up,2>
# transition then also ends in a full sign flip
LITERATURE_ROTATIONS = ((np.pi / np.sqrt(2.0), 0.0), (np.pi, np.pi / 2), (np.pi / np.sqrt(2.0), 0.0),
                        (np.pi, np.pi / 2))


def composite_pulse_gate(sequence, model: GateModel):
    """Propagate the four gate basis states through fixed (duration, phase) pulses.

    Returns
    -------
    states : ndarray (4, 2, N)
        Final states in the laser frame.
    F : float
        Phase-gate fidelity against the targets at the total duration.
    """
    from .core import phase_fidelity
    dyn = model.dynamics()
    psi = model.basis_states()
    T = 0.0
    for duration, phase in sequence:
        if duration < 0:
            raise InvalidArgumentError("pulse durations must be non-negative")
        psi = dyn.evolve(psi, float(phase), float(duration))
        T += float(duration)
    return psi, phase_fidelity(psi, model.targets(T), model.grid.dx)


def phase_controls(sequence, model: GateModel, T: float | None = None) -> ControlSet:
    """Piecewise-constant phase samples of a pulse sequence on the model's control grid."""
    total = sum(d for d, _ in sequence) if T is None else T
    n = max(1, int(round(total / model.dt)))
    dt = total / n
    t = (np.arange(n) + 0.5) * dt
    vals = np.zeros(n)
    edges = np.cumsum([0.0] + [d for d, _ in sequence])
    for (d, p), a, b in zip(sequence, edges[:-1], edges[1:]):
        vals[(t >= a) & (t < b)] = p
    return ControlSet(vals[None, :], dt)
