"""Post-processing of sampled trajectories."""
from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError
from .forces import total_energy
from .integrators import ForceField, Trajectory


def oscillation_frequency(t, u, average_over: float | None = None) -> float:
    """Frequency (Hz) of a sampled oscillation from its zero crossings.

    Parameters
    ----------
    t, u : array_like
        Uniform sample times and one coordinate.
    average_over : float, optional
        Width (s) of a moving average applied first; set it to the rf period
        to strip micromotion and keep the secular oscillation.

    Crossings are located by linear interpolation; consecutive crossings are
    half a period apart.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    if t.shape != u.shape or t.size < 3:
        raise InvalidArgumentError("need matching sample arrays with at least 3 points")
    if average_over:
        h = t[1] - t[0]
        k = max(1, int(round(average_over / h)))
        u = np.convolve(u, np.ones(k) / k, mode="valid")
        t = t[: u.size] + 0.5 * (k - 1) * h
    s = np.nonzero(np.signbit(u[:-1]) != np.signbit(u[1:]))[0]
    if s.size < 2:
        raise InvalidArgumentError("fewer than two zero crossings in the sampled window")
    tz = t[s] - u[s] * (t[s + 1] - t[s]) / (u[s + 1] - u[s])
    return float(0.5 * (tz.size - 1) / (tz[-1] - tz[0]))


def excursion_halves(traj: Trajectory, axes=(1, 2)):
    """Max |x| over the selected axes in the first and the second half of the run."""
    x = np.abs(traj.x.reshape(len(traj.states), -1, 3)[:, :, list(axes)])
    mid = x.shape[0] // 2
    return float(x[:mid].max()), float(x[mid:].max())


def energy_series(traj: Trajectory, field_: ForceField) -> np.ndarray:
    """Total energy (J) at every stored state."""
    if field_.potential is None:
        raise InvalidArgumentError("force field has no potential energy")
    return np.array([total_energy(s, field_) for s in traj.states])


def relative_energy_drift(energies) -> float:
    """max |E - E_0| / |E_0|."""
    e = np.asarray(energies, dtype=float)
    if e[0] == 0:
        raise InvalidArgumentError("initial energy is zero; drift is undefined")
    return float(np.max(np.abs(e - e[0])) / abs(e[0]))


def secular_energy_drift(energies, window: int) -> float:
    """|<E>_last - <E>_first| / |E_0| with means over the first and last ``window`` samples.

    Bounded oscillations (e.g. of a symplectic integrator around its shadow
    energy) average out; systematic growth does not.
    """
    e = np.asarray(energies, dtype=float)
    if window < 1 or 2 * window > e.size:
        raise InvalidArgumentError("window must be between 1 and half the series length")
    if e[0] == 0:
        raise InvalidArgumentError("initial energy is zero; drift is undefined")
    return float(abs(e[-window:].mean() - e[:window].mean()) / abs(e[0]))
