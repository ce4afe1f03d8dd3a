"""Wavepacket transport with electrode voltages as controls.

The Hamiltonian on the grid is T + sum_i u_i V_i(x), with V_i the potential
energy per volt on electrode i in units of hbar*omega and lengths in the
oscillator length of the reference well.  :func:`trap_transport_setup`
builds the whole chain from a BEM trap: axis basis, Tikhonov voltages along
a raised-cosine path (the initial guess), potentials on the quantum grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, InvalidArgumentError
from ..inversevolt import BasisMatrix, WaveformConfig, transport_waveforms
from ..qdyn.fourier import eigenstates
from ..qdyn.grid import SpatialGrid, harmonic_ground_state, optimal_grid_points
from ..trapmodel import IonSpecies
from ..units import NaturalUnits
from .core import ControlProblem, ControlSet, sin2_shape
from .dynamics import GridDynamics


def raised_cosine_path(t, T: float, x_start: float, x_end: float):
    """x_start + (x_end - x_start)(1 - cos(pi t/T))/2."""
    t = np.asarray(t, dtype=float)
    return x_start + (x_end - x_start) * 0.5 * (1.0 - np.cos(np.pi * t / T))


def axis_frequency_from_curvature(ion: IonSpecies, delta: float) -> float:
    """omega for q delta x^2 = m omega^2 x^2 / 2, delta in V/m^2."""
    if ion.charge * delta <= 0:
        raise InvalidArgumentError("curvature must confine the ion (q delta > 0)")
    return float(np.sqrt(2.0 * ion.charge * delta / ion.mass))


def electrode_potentials_natural(phi_si, ion: IonSpecies, units: NaturalUnits, ref_index: int | None = None):
    """q Phi_i / (hbar omega) per volt, with Phi_i at ``ref_index`` subtracted.

    Constant offsets only add a global phase; removing them keeps the
    spectral range of the grid Hamiltonian small.
    """
    phi = np.atleast_2d(np.asarray(phi_si, dtype=float))
    ref = phi.shape[1] // 2 if ref_index is None else ref_index
    return ion.charge * (phi - phi[:, ref:ref + 1]) / units.energy


def transport_problem(V_controls, guess: ControlSet, grid: SpatialGrid, x_target: float, V_static=None,
                      method: str = "chebyshev") -> ControlProblem:
    """Single-state problem: ground state of the initial well to the oscillator ground state at ``x_target``.

    Parameters
    ----------
    V_controls : (n_controls, N) array
        dH/du_i on the grid, hbar*omega per volt.
    guess : ControlSet
        Its first column fixes the initial well, whose ground state is found
        by diagonalisation.
    x_target : float
        Goal centre in oscillator lengths.
    """
    Vc = np.atleast_2d(np.asarray(V_controls, dtype=float))
    if Vc.shape != (guess.n_controls, grid.N):
        raise InvalidArgumentError("need one grid potential per control")
    x = grid.x
    if not x[0] <= x_target <= x[-1]:
        raise DomainError(f"target position {x_target:.4g} lies outside the grid [{x[0]:.4g}, {x[-1]:.4g}]")
    V0 = np.zeros(grid.N) if V_static is None else np.asarray(V_static, dtype=float)
    dyn = GridDynamics(grid, V0, Vc, guess.dt, method=method)
    ground = eigenstates(grid, dyn.potential(guess.values[:, 0]), n_states=1).vectors[:, 0]
    goal = harmonic_ground_state(grid, x_target)
    return ControlProblem(ground[None, :], goal[None, :], dyn, guess.n_steps, guess.dt, "state",
                          info={"x_target": x_target})


def motional_excitation(grid: SpatialGrid, potential, psi, n_states: int = 20) -> float:
    """<n> of ``psi`` in the eigenbasis of ``potential`` (population outside the basis counts as n_states)."""
    e = eigenstates(grid, potential, n_states=n_states)
    p = np.abs(e.vectors.conj().T @ np.asarray(psi) * grid.dx) ** 2
    return float(np.sum(np.arange(p.size) * p) + n_states * max(0.0, 1.0 - p.sum()))


@dataclass
class TrapTransportSetup:
    """Everything produced by :func:`trap_transport_setup`."""

    problem: ControlProblem
    guess: ControlSet
    grid: SpatialGrid
    units: NaturalUnits
    electrodes: list
    phi_grid: np.ndarray
    basis: BasisMatrix
    path: np.ndarray
    info: dict = field(default_factory=dict)


def trap_transport_setup(system, electrodes, ion: IonSpecies, delta: float, distance: float, duration: float,
                         dt: float, roi_halfwidth: float = 20e-6, n_axis: int = 81, bounds=(-10.0, 10.0),
                         grid_length: float | None = None, grid_points: int | None = None, lam: float = 1.0,
                         shaped: bool = True, method: str = "chebyshev", x_start: float = 0.0) -> TrapTransportSetup:
    """BEM trap -> axis basis -> Tikhonov guess -> grid transport problem.

    Parameters
    ----------
    system : BemSystem
    electrodes : list of str
        Control electrodes (columns of the basis matrix).
    delta : float
        Well curvature in V/m^2; fixes the reference frequency and units.
    distance : float
        Transport distance in oscillator lengths.
    duration, dt : float
        Horizon and control interval in 1/omega.
    roi_halfwidth : float
        Half-width (m) of the axis region sampled for the inversion.
    grid_length, grid_points : optional
        Quantum grid; default length covers the path plus 10 oscillator
        lengths on each side, and the point count follows N_opt.
    """
    from ..fieldsolve import axis_points, evaluate_potential, unit_solutions

    omega = axis_frequency_from_curvature(ion, delta)
    units = NaturalUnits(ion.mass, omega)
    x0 = units.length
    sols = unit_solutions(system, electrodes)
    xa = x_start + np.linspace(-roi_halfwidth, roi_halfwidth, n_axis)
    basis = BasisMatrix(evaluate_potential(system, sols, axis_points(xa)), xa, list(electrodes))

    n_steps = max(1, int(round(duration / dt)))
    dt = duration / n_steps
    t_mid = (np.arange(n_steps) + 0.5) * dt
    centers = raised_cosine_path(t_mid, duration, 0.0, distance)
    wave = transport_waveforms(basis, x_start + centers * x0, delta,
                               WaveformConfig(bounds=bounds, roi_halfwidth=roi_halfwidth))

    L = grid_length if grid_length is not None else abs(distance) + 20.0
    center = 0.5 * distance
    if grid_points is None:
        v_max = 0.5 * (0.5 * L + 0.5 * abs(distance)) ** 2
        grid_points = optimal_grid_points(v_max, L)
        grid_points += grid_points % 2
    grid = SpatialGrid.centered(L, grid_points, center)
    phi = evaluate_potential(system, sols, axis_points(x_start + grid.x * x0)).T
    ref = int(np.argmin(np.abs(grid.x)))
    Vc = electrode_potentials_natural(phi, ion, units, ref)
    guess = ControlSet(wave.voltages.T, dt, lambdas=lam, shape=sin2_shape(n_steps) if shaped else None)
    problem = transport_problem(Vc, guess, grid, distance, method=method)
    info = {"omega": omega, "x0": x0, "alphas": wave.alphas, "n_steps": n_steps, "dt": dt}
    return TrapTransportSetup(problem, guess, grid, units, list(electrodes), phi, basis, centers, info)
