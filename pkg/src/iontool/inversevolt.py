"""Electrode voltages from target axial potentials by regularised inversion.

With the basis matrix A (axis point x electrode) and its SVD A = U S V^T,
small singular values are damped by the smooth truncation s' = s/(s^2+a^2).
This equals the minimiser of |A u - phi|^2 + a^2 |u|^2; the second,
anchored form adds V D V^T u0 with d = a^2/(s^2+a^2), which pulls the
solution towards u0 along poorly determined directions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, InvalidArgumentError, NumericalError

ALPHA_SEARCH = (1e-8, 1e4)


@dataclass(frozen=True)
class BasisMatrix:
    """Axis potentials per volt, one column per electrode.

    Parameters
    ----------
    A : ndarray, shape (M, N)
    x : ndarray, shape (M,)
        Axis positions in m.
    electrodes : list of str, optional
    """

    A: np.ndarray
    x: np.ndarray
    electrodes: list = field(default_factory=list)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if A.ndim != 2 or A.shape[0] <= A.shape[1] or A.shape[1] < 1:
            raise InvalidArgumentError("basis matrix must be M x N with M > N >= 1")
        if x.shape != (A.shape[0],):
            raise InvalidArgumentError("one axis position per row required")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "x", x)

    def rows(self, center: float, halfwidth: float):
        """Boolean mask of axis points within ``halfwidth`` of ``center``."""
        return np.abs(self.x - center) <= halfwidth


@dataclass(frozen=True)
class TikhonovConfig:
    """Regularisation settings.

    Parameters
    ----------
    alpha : float
        Truncation parameter, same units as the singular values.
    weights : array_like, optional
        Electrode weights in (0, 1]; default all ones.
    u0 : array_like, optional
        Anchor voltages in V.
    bounds : (float, float), optional
        Voltage range in V.
    """

    alpha: float = 0.0
    weights: np.ndarray | None = None
    u0: np.ndarray | None = None
    bounds: tuple | None = None

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise InvalidArgumentError("alpha must be >= 0")
        if self.weights is not None:
            _check_weights(self.weights)


@dataclass(frozen=True)
class TargetPotential:
    """Target samples on the axis plus the harmonic descriptor they came from."""

    values: np.ndarray
    x: np.ndarray
    center: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgumentError("target potential must be finite")


def harmonic_target(x, center: float, delta: float, offset: float = 0.0) -> TargetPotential:
    """Target delta (x - center)^2 + offset, delta in V/m^2."""
    x = np.asarray(x, dtype=float)
    return TargetPotential(delta * (x - center) ** 2 + offset, x, center, delta)


def _check_weights(w):
    w = np.asarray(w, dtype=float)
    if np.any(~np.isfinite(w)) or np.any(w <= 0) or np.any(w > 1):
        raise InvalidArgumentError("weights must lie in (0, 1]")
    return w


def svd(A):
    """Thin SVD A = U diag(S) V^T.

    Returns
    -------
    U : (M, K), S : (K,) descending, V : (N, K)
    """
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise InvalidArgumentError("matrix has non-finite entries")
    try:
        U, S, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return U, S, Vt.T


def truncation_factors(s, alpha: float):
    """Smooth truncation s' = s/(s^2+alpha^2) and anchor weights d = alpha^2/(s^2+alpha^2).

    At alpha = 0, s' = 1/s and d = 0 for s > 0; exact zeros give s' = 0, d = 1.
    """
    s = np.asarray(s, dtype=float)
    den = s * s + alpha * alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        sp = np.where(den > 0, s / den, 0.0)
        d = np.where(den > 0, alpha * alpha / den, 1.0)
    return sp, d


def _full_svd(A):
    # full V so that null directions of a wide or rank-deficient matrix are kept
    U, S, Vt = np.linalg.svd(np.asarray(A, dtype=float), full_matrices=True)
    n = Vt.shape[0]
    s = np.zeros(n)
    s[:S.size] = S
    # singular values at roundoff level count as null directions
    tiny = S.max(initial=0.0) * max(A.shape) * np.finfo(float).eps
    s[s <= tiny] = 0.0
    Uk = np.zeros((U.shape[0], n))
    k = min(U.shape[1], n)
    Uk[:, :k] = U[:, :k]
    return Uk, s, Vt.T


def tikhonov_solve(A, phi, alpha: float) -> np.ndarray:
    """u = V S' U^T phi."""
    return tikhonov_solve_anchored(A, phi, alpha, None)


def tikhonov_solve_anchored(A, phi, alpha: float, u0=None) -> np.ndarray:
    """u = V S' U^T phi + V D V^T u0."""
    if alpha < 0:
        raise InvalidArgumentError("alpha must be >= 0")
    U, s, V = _full_svd(A)
    sp, d = truncation_factors(s, alpha)
    u = V @ (sp * (U.T @ np.asarray(phi, dtype=float)))
    if u0 is not None:
        u0 = np.asarray(u0, dtype=float)
        if u0.shape != (V.shape[0],):
            raise InvalidArgumentError("anchor needs one voltage per electrode")
        u = u + V @ (d * (V.T @ u0))
    return u


def tikhonov_solve_weighted(A, phi, alpha: float, u0=None, weights=None) -> np.ndarray:
    """Weighted solve on A' = A W, returning physical voltages u = W u'.

    The anchor is mapped to the primed frame as u0 / w, so that the damped
    directions are still pulled towards u0 in volts.  At alpha = 0 the
    physical residual A u - phi is the least-squares one.
    """
    A = np.asarray(A, dtype=float)
    if weights is None:
        return tikhonov_solve_anchored(A, phi, alpha, u0)
    w = _check_weights(weights)
    if w.shape != (A.shape[1],):
        raise InvalidArgumentError("one weight per electrode required")
    u0p = None if u0 is None else np.asarray(u0, dtype=float) / w
    return w * tikhonov_solve_anchored(A * w[None, :], phi, alpha, u0p)


def _within(u, bounds) -> bool:
    lo, hi = bounds
    return bool(np.all(u >= lo) and np.all(u <= hi))


def auto_alpha(A, phi, u0=None, bounds=(-10.0, 10.0), weights=None, predicate=None, rtol: float = 1e-6):
    """Smallest alpha whose solution satisfies the voltage bounds.

    Bisection on log(alpha) over [1e-8, 1e4] times the largest singular value.
    ``predicate(u) -> bool`` may add a further monotone feasibility condition.

    Returns
    -------
    (u, alpha)
    """
    lo_b, hi_b = bounds
    if not lo_b < hi_b:
        raise InvalidArgumentError("empty voltage range")
    smax = float(np.linalg.norm(np.asarray(A, dtype=float), 2)) or 1.0

    def ok(a):
        u = tikhonov_solve_weighted(A, phi, a, u0, weights)
        return (_within(u, bounds) and (predicate is None or predicate(u))), u

    lo, hi = ALPHA_SEARCH[0] * smax, ALPHA_SEARCH[1] * smax
    f_lo, u_lo = ok(lo)
    if f_lo:
        return u_lo, lo
    f_hi, u_hi = ok(hi)
    if not f_hi:
        raise InfeasibleError(f"no alpha up to {hi:.3g} keeps the voltages within {bounds}")
    while hi / lo > 1.0 + rtol:
        mid = np.sqrt(lo * hi)
        f, u = ok(mid)
        if f:
            hi, u_hi = mid, u
        else:
            lo = mid
    return u_hi, hi


@dataclass(frozen=True)
class WaveformConfig:
    """Settings for :func:`transport_waveforms`.

    Parameters
    ----------
    bounds : (float, float)
        Voltage range in V.
    max_step : float or None
        Cap on max_j |u_j(k) - u_j(k-1)| in V; enforced from step 1 on.
    roi_halfwidth : float
        Half-width (m) of the region around each well centre used for the fit.
    u_start : array_like, optional
        Anchor for the first step; default zeros.
    weights : array_like, optional
    offset : float
        Potential at the well minimum, V.
    """

    bounds: tuple = (-10.0, 10.0)
    max_step: float | None = None
    roi_halfwidth: float = 3e-3
    u_start: np.ndarray | None = None
    weights: np.ndarray | None = None
    offset: float = 0.0


@dataclass
class Waveform:
    """Voltages (steps x electrodes) with the alpha used at each step."""

    voltages: np.ndarray
    alphas: np.ndarray
    centers: np.ndarray


def solve_well(basis: BasisMatrix, center: float, delta: float, config: WaveformConfig, u0=None,
               predicate=None):
    """Voltages for one harmonic well; returns (u, alpha)."""
    rows = basis.rows(center, config.roi_halfwidth)
    if rows.sum() <= basis.A.shape[1]:
        raise InvalidArgumentError("region of interest holds too few axis points")
    tgt = harmonic_target(basis.x[rows], center, delta, config.offset)
    return auto_alpha(basis.A[rows], tgt.values, u0, config.bounds, config.weights, predicate)


def transport_waveforms(basis: BasisMatrix, centers, delta: float, config: WaveformConfig | None = None) -> Waveform:
    """Sequence of anchored inversions moving a harmonic well along ``centers``.

    Step k is anchored on u(k-1), and alpha is raised until both the bounds
    and the per-step cap hold.
    """
    config = config or WaveformConfig()
    centers = np.asarray(centers, dtype=float).ravel()
    lo, hi = basis.x.min(), basis.x.max()
    if np.any(centers < lo) or np.any(centers > hi):
        raise InvalidArgumentError("well centres must lie within the sampled axis")
    n = basis.A.shape[1]
    prev = np.zeros(n) if config.u_start is None else np.asarray(config.u_start, dtype=float)
    out, alphas = np.zeros((centers.size, n)), np.zeros(centers.size)
    for k, c in enumerate(centers):
        pred = None
        if k > 0 and config.max_step is not None:
            anchor = prev.copy()
            pred = lambda u, a=anchor: float(np.max(np.abs(u - a))) <= config.max_step
        try:
            u, a = solve_well(basis, c, delta, config, prev, pred)
        except InfeasibleError as exc:
            raise InfeasibleError(f"transport step {k} (x0 = {c:.4g} m): {exc}") from exc
        out[k], alphas[k] = u, a
        prev = u
    return Waveform(out, alphas, centers)


def fitted_curvature(basis: BasisMatrix, u, center: float, halfwidth: float) -> float:
    """delta of the parabola c0 + c1 (x-x0) + delta (x-x0)^2 fitted to A u near ``center``."""
    rows = basis.rows(center, halfwidth)
    return float(np.polyfit(basis.x[rows] - center, basis.A[rows] @ np.asarray(u, dtype=float), 2)[0])
