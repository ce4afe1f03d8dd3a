"""Force fields for trapped ions: harmonic and Mathieu test fields, the
quadrupole trap model, pairwise Coulomb repulsion, and energy diagnostics."""
from __future__ import annotations

import numpy as np

from .._accel import USE_NUMBA, njit
from ..errors import InvalidArgumentError, SingularityError
from ..trapmodel import IonSpecies, QuadrupoleCoefficients, TrapDrive, quadrupole_gradient, quadrupole_potential
from ..units import COULOMB_K
from .integrators import ForceField, PhaseState


# ----------------------------------------------------------- Coulomb --
@njit
def _coulomb_kernel(x, qm, qq):
    # qm[i] = q_i / m_i, qq[j] = k q_j; returns accelerations and min distance
    n = x.shape[0]
    a = np.zeros_like(x)
    rmin = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i, 0] - x[j, 0]
            dy = x[i, 1] - x[j, 1]
            dz = x[i, 2] - x[j, 2]
            r2 = dx * dx + dy * dy + dz * dz
            r = np.sqrt(r2)
            if r < rmin:
                rmin = r
            if r2 == 0.0:
                continue
            inv3 = 1.0 / (r2 * r)
            fi = qq[j] * qm[i] * inv3
            fj = qq[i] * qm[j] * inv3
            a[i, 0] += fi * dx
            a[i, 1] += fi * dy
            a[i, 2] += fi * dz
            a[j, 0] -= fj * dx
            a[j, 1] -= fj * dy
            a[j, 2] -= fj * dz
    return a, rmin


def _coulomb_numpy(x, qm, qq):
    d = x[:, None, :] - x[None, :, :]
    r = np.linalg.norm(d, axis=-1)
    iu = np.triu_indices(x.shape[0], 1)
    rmin = float(r[iu].min()) if iu[0].size else np.inf
    np.fill_diagonal(r, np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv3 = np.where(r > 0, 1.0 / r ** 3, 0.0)
    a = qm[:, None] * np.einsum("ij,ijk->ik", qq[None, :] * inv3, d)
    return a, rmin


def _species_arrays(species, n):
    if isinstance(species, IonSpecies):
        species = [species] * n
    if len(species) != n:
        raise InvalidArgumentError("one species per particle required")
    q = np.array([s.charge for s in species])
    m = np.array([s.mass for s in species])
    return q, m


def coulomb_force(x, species, use_numba: bool | None = None) -> np.ndarray:
    """Pairwise Coulomb accelerations (m/s^2).

    Parameters
    ----------
    x : array_like, shape (P, 3)
        Positions in m, P >= 2.
    species : IonSpecies or sequence of IonSpecies
    """
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != 3 or x.shape[0] < 2:
        raise InvalidArgumentError("coulomb_force needs positions of shape (P>=2, 3)")
    q, m = _species_arrays(species, x.shape[0])
    qm, qq = q / m, COULOMB_K * q
    if USE_NUMBA if use_numba is None else use_numba:
        a, rmin = _coulomb_kernel(x, qm, qq)
    else:
        a, rmin = _coulomb_numpy(x, qm, qq)
    if rmin == 0.0:
        raise SingularityError("coincident particles in Coulomb sum")
    return a


def coulomb_energy(x, species) -> float:
    """Pairwise Coulomb energy sum_{i<j} k q_i q_j / r_ij (J)."""
    x = np.asarray(x, dtype=float)
    q, _ = _species_arrays(species, x.shape[0])
    iu = np.triu_indices(x.shape[0], 1)
    r = np.linalg.norm(x[iu[0]] - x[iu[1]], axis=-1)
    if np.any(r == 0):
        raise SingularityError("coincident particles in Coulomb sum")
    return float(COULOMB_K * np.sum(q[iu[0]] * q[iu[1]] / r))


# ------------------------------------------------------ model fields --
def harmonic_field(omega, mass: float = 1.0) -> ForceField:
    """Isotropic or per-axis harmonic field a = -omega^2 x (omega scalar or per axis)."""
    w2 = np.asarray(omega, dtype=float) ** 2

    def accel(t, x):
        return -w2 * x

    def potential(t, x):
        return float(0.5 * mass * np.sum(w2 * np.asarray(x) ** 2))

    return ForceField(accel, potential, masses=np.asarray(mass, dtype=float), static=True)


def mathieu_field(a, q, omega_rf: float) -> ForceField:
    """Field of u'' = -(omega_rf^2/4)(a - 2 q cos omega_rf t) u, per axis.

    ``a`` and ``q`` broadcast against the trailing axis of the positions.
    """
    a = np.asarray(a, dtype=float)
    q = np.asarray(q, dtype=float)
    pref = 0.25 * omega_rf ** 2

    def accel(t, x):
        return -pref * (a - 2.0 * q * np.cos(omega_rf * t)) * x

    return ForceField(accel, None, static=False, rf_modulated=True)


def quadrupole_field(ion: IonSpecies, coeffs: QuadrupoleCoefficients, drive: TrapDrive,
                     coulomb: bool = False) -> ForceField:
    """Ion acceleration -(q/m) grad Phi in the quadrupole trap model.

    Positions may be (3,) for one ion or (P, 3); with ``coulomb`` the mutual
    repulsion of identical ions is added.
    """
    qm = ion.charge / ion.mass

    def accel(t, x):
        a = -qm * quadrupole_gradient(coeffs, drive, t, x)
        if coulomb and np.ndim(x) == 2 and x.shape[0] > 1:
            a = a + coulomb_force(x, ion)
        return a

    def potential(t, x):
        e = ion.charge * float(np.sum(quadrupole_potential(coeffs, drive, t, x)))
        if coulomb and np.ndim(x) == 2 and x.shape[0] > 1:
            e += coulomb_energy(x, ion)
        return e

    return ForceField(accel, potential, masses=np.asarray(ion.mass), static=drive.U_rf == 0,
                      rf_modulated=drive.U_rf != 0)


def static_well_field(ion: IonSpecies, omega_axial, coulomb: bool = True) -> ForceField:
    """Identical ions in a static harmonic well with frequencies ``omega_axial`` (scalar or per axis)."""
    w2 = np.asarray(omega_axial, dtype=float) ** 2

    def accel(t, x):
        a = -w2 * x
        if coulomb and np.ndim(x) == 2 and x.shape[0] > 1:
            a = a + coulomb_force(x, ion)
        return a

    def potential(t, x):
        e = 0.5 * ion.mass * float(np.sum(w2 * np.asarray(x) ** 2))
        if coulomb and np.ndim(x) == 2 and x.shape[0] > 1:
            e += coulomb_energy(x, ion)
        return e

    return ForceField(accel, potential, masses=np.asarray(ion.mass), static=True)


def kinetic_energy(state: PhaseState, masses=None) -> float:
    """sum 1/2 m v^2; ``masses`` broadcast per particle (default 1)."""
    v = np.atleast_2d(state.v)
    m = np.ones(v.shape[0]) if masses is None else np.broadcast_to(np.asarray(masses, float), (v.shape[0],))
    return float(0.5 * np.sum(m[:, None] * v * v))


def total_energy(state: PhaseState, field_: ForceField) -> float:
    """Kinetic plus potential energy of ``state`` in ``field_``."""
    if field_.potential is None:
        raise InvalidArgumentError("force field has no potential energy")
    return kinetic_energy(state, field_.masses) + field_.potential(state.t, state.x)


def relax_to_equilibrium(x0, field_: ForceField, h: float, n_steps: int, damping: float) -> np.ndarray:
    """Damped Verlet relaxation v <- (1 - damping) v; returns the final positions."""
    x = np.array(x0, dtype=float)
    v = np.zeros_like(x)
    a = field_(0.0, x)
    for _ in range(n_steps):
        v = (1.0 - damping) * (v + 0.5 * h * a)
        x = x + h * v
        a = field_(0.0, x)
        v = v + 0.5 * h * a
    return x
