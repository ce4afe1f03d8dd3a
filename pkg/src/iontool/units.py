"""Physical constants and the natural unit system used by the quantum modules."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants as _c

AMU = _c.physical_constants["atomic mass constant"][0]
E_CHARGE = _c.e
HBAR = _c.hbar
EPS0 = _c.epsilon_0
COULOMB_K = 1.0 / (4.0 * np.pi * EPS0)


@dataclass(frozen=True)
class NaturalUnits:
    """Oscillator units with hbar = m = omega = 1.

    Parameters
    ----------
    mass : float
        Particle mass in kg.
    omega : float
        Reference angular frequency in rad/s.
    """

    mass: float
    omega: float

    @property
    def length(self) -> float:
        """Oscillator length sqrt(hbar/(m omega)) in metres."""
        return float(np.sqrt(HBAR / (self.mass * self.omega)))

    @property
    def energy(self) -> float:
        """hbar*omega in joules."""
        return HBAR * self.omega

    @property
    def time(self) -> float:
        """1/omega in seconds."""
        return 1.0 / self.omega

    def to_si_length(self, x):
        return np.asarray(x) * self.length

    def from_si_length(self, x):
        return np.asarray(x) / self.length

    def to_si_time(self, t):
        return np.asarray(t) * self.time

    def from_si_time(self, t):
        return np.asarray(t) / self.time

    def from_si_energy(self, e):
        return np.asarray(e) / self.energy
