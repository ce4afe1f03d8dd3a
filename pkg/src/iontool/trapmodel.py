"""Linear Paul-trap parametrisation.

The trap potential near the centre is written as a static plus an rf
quadrupole,

    Phi(x, t) = U_dc/2 (a_dc x^2 + b_dc y^2 + g_dc z^2)
              + U_rf/2 cos(omega_rf t) (a_rf x^2 + b_rf y^2 + g_rf z^2),

with the Laplace constraint that each coefficient triple sums to zero.  All
quantities are SI; ion masses may be given in atomic mass units through
:meth:`IonSpecies.from_amu`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AntiTrappingError, InvalidArgumentError, UnstableParametersError
from .units import AMU, E_CHARGE

LAPLACE_RTOL = 1e-12


@dataclass(frozen=True)
class IonSpecies:
    """Ion mass (kg) and signed charge (C)."""

    mass: float
    charge: float

    def __post_init__(self):
        if not np.isfinite(self.mass) or self.mass <= 0:
            raise InvalidArgumentError(f"ion mass must be positive, got {self.mass}")
        if not np.isfinite(self.charge) or self.charge == 0:
            raise InvalidArgumentError("ion charge must be nonzero")

    @classmethod
    def from_amu(cls, mass_amu: float, charge_e: float = 1.0) -> "IonSpecies":
        """Build from a mass in u and a charge in elementary charges."""
        return cls(mass=float(mass_amu) * AMU, charge=float(charge_e) * E_CHARGE)


CA40 = IonSpecies.from_amu(40.0, 1.0)


@dataclass(frozen=True)
class TrapDrive:
    """Trap voltages.

    Parameters
    ----------
    U_rf : float
        rf amplitude in V (half the peak-to-peak value).
    omega_rf : float
        rf angular frequency in rad/s.
    U_dc : float
        Static voltage scale in V multiplying the dc coefficients.
    """

    U_rf: float
    omega_rf: float
    U_dc: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.omega_rf) or self.omega_rf <= 0:
            raise InvalidArgumentError("omega_rf must be positive")


def _laplace_ok(vals) -> bool:
    scale = max(abs(v) for v in vals)
    return abs(sum(vals)) <= LAPLACE_RTOL * scale if scale > 0 else True


@dataclass(frozen=True)
class QuadrupoleCoefficients:
    """Curvature coefficients (1/m^2) of the dc and rf quadrupoles."""

    alpha_dc: float
    beta_dc: float
    gamma_dc: float
    alpha_rf: float
    beta_rf: float
    gamma_rf: float

    def __post_init__(self):
        vals = (self.alpha_dc, self.beta_dc, self.gamma_dc, self.alpha_rf, self.beta_rf, self.gamma_rf)
        if not all(np.isfinite(vals)):
            raise InvalidArgumentError("quadrupole coefficients must be finite")
        if not _laplace_ok(vals[:3]):
            raise InvalidArgumentError("dc coefficients violate the Laplace constraint")
        if not _laplace_ok(vals[3:]):
            raise InvalidArgumentError("rf coefficients violate the Laplace constraint")

    @classmethod
    def projected(cls, dc, rf) -> "QuadrupoleCoefficients":
        """Build from (possibly noisy) fitted triples by removing their mean.

        The correction is the orthogonal projection onto the Laplace plane.
        """
        dc = np.asarray(dc, dtype=float)
        rf = np.asarray(rf, dtype=float)
        dc = dc - dc.mean()
        rf = rf - rf.mean()
        # remove the last rounding residue exactly
        dc[2] = -(dc[0] + dc[1])
        rf[2] = -(rf[0] + rf[1])
        return cls(*(float(v) for v in dc), *(float(v) for v in rf))

    @classmethod
    def linear_trap(cls, beta_rf: float, alpha_dc: float) -> "QuadrupoleCoefficients":
        """Symmetric linear trap: alpha_rf = 0, gamma_rf = -beta_rf, radial dc split evenly."""
        return cls(alpha_dc, -alpha_dc / 2, -alpha_dc / 2, 0.0, beta_rf, -beta_rf)

    @property
    def dc(self) -> np.ndarray:
        return np.array([self.alpha_dc, self.beta_dc, self.gamma_dc])

    @property
    def rf(self) -> np.ndarray:
        return np.array([self.alpha_rf, self.beta_rf, self.gamma_rf])


@dataclass(frozen=True)
class MathieuParams:
    """Dimensionless Mathieu parameters for one transverse axis."""

    a: float
    q: float

    @property
    def beta(self) -> float:
        """Lowest-order stability parameter sqrt(a + q^2/2)."""
        rad = self.a + 0.5 * self.q ** 2
        if rad < 0:
            raise UnstableParametersError(f"a + q^2/2 = {rad:.3g} < 0")
        return float(np.sqrt(rad))


def mathieu_parameters(ion: IonSpecies, drive: TrapDrive, coeffs: QuadrupoleCoefficients) -> dict:
    """Mathieu a and q for the y and z axes.

    Both axes use the same form, obtained by writing m u'' = -q dPhi/du as
    u'' + (omega_rf^2/4)(a_u - 2 q_u cos omega_rf t) u = 0:

        a_u = 4 q U_dc k_dc / (m omega_rf^2),  q_u = -2 q U_rf k_rf / (m omega_rf^2)

    with k = beta for y and k = gamma for z.  A linear trap with
    beta_rf = -gamma_rf therefore has q_y = -q_z.

    Returns
    -------
    dict
        ``{"y": MathieuParams, "z": MathieuParams}``.
    """
    vals = (drive.U_rf, drive.omega_rf, drive.U_dc, *coeffs.dc, *coeffs.rf)
    if not all(np.isfinite(np.asarray(vals, dtype=float))):
        raise InvalidArgumentError("non-finite trap parameters")
    s = ion.charge / (ion.mass * drive.omega_rf ** 2)
    q_y = -2 * s * drive.U_rf * coeffs.beta_rf
    a_y = 4 * s * drive.U_dc * coeffs.beta_dc
    q_z = -2 * s * drive.U_rf * coeffs.gamma_rf
    a_z = 4 * s * drive.U_dc * coeffs.gamma_dc
    return {"y": MathieuParams(a_y, q_y), "z": MathieuParams(a_z, q_z)}


def secular_frequency(p: MathieuParams, omega_rf: float) -> float:
    """Secular angular frequency beta * omega_rf / 2."""
    return p.beta * omega_rf / 2


def stability_region_check(p: MathieuParams) -> bool:
    """True when 0 <= beta <= 1 (lowest-order criterion only)."""
    rad = p.a + 0.5 * p.q ** 2
    return bool(rad >= 0 and np.sqrt(rad) <= 1.0)


def axial_frequency(ion: IonSpecies, U_dc: float, alpha_dc: float) -> float:
    """Axial frequency sqrt(|q| U_dc alpha_dc / m) of the static well."""
    rad = abs(ion.charge) * U_dc * alpha_dc / ion.mass
    if rad < 0:
        raise AntiTrappingError("U_dc * alpha_dc < 0 does not confine the ion axially")
    return float(np.sqrt(rad))


def pseudopotential(grad_phi, ion: IonSpecies, omega_rf: float):
    """Effective potential |q| |grad Phi|^2 / (4 m omega_rf^2) in volts.

    Parameters
    ----------
    grad_phi : array_like, shape (..., 3)
        rf field amplitude samples (gradient of the rf potential), V/m.
    """
    if omega_rf <= 0:
        raise InvalidArgumentError("omega_rf must be positive")
    g = np.asarray(grad_phi, dtype=float)
    return abs(ion.charge) * np.sum(g * g, axis=-1) / (4 * ion.mass * omega_rf ** 2)


def quadrupole_potential(coeffs: QuadrupoleCoefficients, drive: TrapDrive, t, x):
    """Potential (V) of the quadrupole model at positions ``x`` (..., 3)."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    dc = 0.5 * drive.U_dc * (x2 @ coeffs.dc)
    rf = 0.5 * drive.U_rf * np.cos(drive.omega_rf * t) * (x2 @ coeffs.rf)
    return dc + rf


def quadrupole_gradient(coeffs: QuadrupoleCoefficients, drive: TrapDrive, t, x):
    """Gradient (V/m) of :func:`quadrupole_potential`."""
    x = np.asarray(x, dtype=float)
    return x * (drive.U_dc * coeffs.dc + drive.U_rf * np.cos(drive.omega_rf * t) * coeffs.rf)


def fit_quadratic_1d(x, phi):
    """Least-squares parabola phi ~ c0 + c1 x + c2 x^2.

    Returns
    -------
    (c0, c1, c2)
    """
    x = np.asarray(x, dtype=float)
    c2, c1, c0 = np.polyfit(x, np.asarray(phi, dtype=float), 2)
    return float(c0), float(c1), float(c2)


def fit_quadrupole(points, phi):
    """Fit phi ~ c + g.x + 1/2 sum_k h_k x_k^2 (+ cross terms) to samples.

    Returns
    -------
    ndarray, shape (3,)
        Diagonal curvatures (h_x, h_y, h_z) in V/m^2.  Divide by the voltage
        scale to obtain coefficients for :class:`QuadrupoleCoefficients`.
    """
    p = np.asarray(points, dtype=float)
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    cols = [np.ones_like(x), x, y, z, 0.5 * x * x, 0.5 * y * y, 0.5 * z * z, x * y, x * z, y * z]
    M = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(M, np.asarray(phi, dtype=float), rcond=None)
    return coef[4:7]
