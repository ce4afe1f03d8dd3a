"""Numerov shooting for bound states of psi'' = g(x) psi, g = 2m(V - E)/hbar^2."""
from __future__ import annotations

import numpy as np

from .._accel import USE_NUMBA, njit
from ..errors import InvalidArgumentError, NotEnoughStatesError, StepSizeError

RESCALE = 1e150


@njit
def _numerov_kernel(g, psi0, psi1, h2):
    n = g.shape[0]
    psi = np.empty(n)
    psi[0] = psi0
    psi[1] = psi1
    for i in range(1, n - 1):
        den = 1.0 - h2 * g[i + 1] / 12.0
        psi[i + 1] = (psi[i] * (2.0 + 10.0 * h2 * g[i] / 12.0) - psi[i - 1] * (1.0 - h2 * g[i - 1] / 12.0)) / den
        if abs(psi[i + 1]) > RESCALE:
            for j in range(i + 2):
                psi[j] /= RESCALE
    return psi


def _numerov_numpy(g, psi0, psi1, h2):
    n = g.size
    psi = np.empty(n)
    psi[0], psi[1] = psi0, psi1
    a = 2.0 + 10.0 * h2 * g / 12.0
    b = 1.0 - h2 * g / 12.0
    for i in range(1, n - 1):
        psi[i + 1] = (psi[i] * a[i] - psi[i - 1] * b[i - 1]) / b[i + 1]
        if abs(psi[i + 1]) > RESCALE:
            psi[: i + 2] /= RESCALE
    return psi


def numerov_integrate(g, psi0: float, psi1: float, dx: float, direction: str = "forward",
                      use_numba: bool | None = None) -> np.ndarray:
    """Three-term Numerov recurrence over the samples ``g``.

    ``direction="backward"`` starts from the right end: ``psi0`` and
    ``psi1`` are then the values at the last and second to last points, and
    the result is still returned in grid order.  Large values are rescaled
    on the fly, so only the shape of the result is meaningful for long
    growing integrations.
    """
    g = np.ascontiguousarray(g, dtype=float)
    if g.ndim != 1 or g.size < 3:
        raise InvalidArgumentError("need at least three samples of g")
    h2 = dx * dx
    if np.any(1.0 - h2 * g / 12.0 <= 0):
        raise StepSizeError("Numerov denominator 1 - dx^2 g/12 <= 0; reduce the step size")
    if direction not in ("forward", "backward"):
        raise InvalidArgumentError("direction must be 'forward' or 'backward'")
    gg = g if direction == "forward" else g[::-1].copy()
    run = _numerov_kernel if (USE_NUMBA if use_numba is None else use_numba) else _numerov_numpy
    psi = run(gg, float(psi0), float(psi1), h2)
    return psi if direction == "forward" else psi[::-1]


def _mismatch(E, x, V, m, hbar, seed):
    """Sine of the angle between left and right Numerov solutions at the match point.

    With y_n = (1 - dx^2 g_n/12) psi_n the recurrence reads
    y_{n+1} + y_{n-1} = c_n y_n, so yL[n] yR[n+1] - yL[n+1] yR[n] does not
    depend on n.  Dividing by the two vector norms at the match point gives
    the normalised log-derivative difference without its poles.
    """
    dx = x[1] - x[0]
    g = 2.0 * m * (V - E) / hbar ** 2
    allowed = np.nonzero(V <= E)[0]
    mpt = int(allowed[-1]) if allowed.size else int(np.argmin(V))
    mpt = min(max(mpt, 1), x.size - 3)
    left = numerov_integrate(g[: mpt + 2], 0.0, seed, dx, "forward")
    right = numerov_integrate(g[mpt:], 0.0, seed, dx, "backward")
    w = 1.0 - dx * dx * g / 12.0
    yl = left[mpt: mpt + 2] * w[mpt: mpt + 2]
    yr = right[:2] * w[mpt: mpt + 2]
    return (yl[0] * yr[1] - yl[1] * yr[0]) / (np.hypot(*yl) * np.hypot(*yr))


def numerov_eigenvalues(x, V, m: float = 1.0, E_range=None, n_states: int = 1, hbar: float = 1.0,
                        n_scan: int = 200, rtol: float = 1e-12) -> np.ndarray:
    """Lowest ``n_states`` bound-state energies by two-sided Numerov shooting.

    Parameters
    ----------
    x, V : array_like
        Uniform grid and potential samples; psi = 0 is imposed at both ends.
    E_range : (float, float), optional
        Scan interval; default (min V, max of the two edge values).
    n_scan : int
        Number of scan samples for sign changes of the mismatch.
    """
    x = np.asarray(x, dtype=float)
    V = np.asarray(V, dtype=float)
    if x.shape != V.shape or x.size < 5:
        raise InvalidArgumentError("x and V must be matching arrays with >= 5 samples")
    if E_range is None:
        E_range = (float(V.min()), float(min(V[0], V[-1])))
    lo, hi = map(float, E_range)
    if not hi > lo:
        raise InvalidArgumentError("empty energy range")
    Es = np.linspace(lo, hi, n_scan)
    f = np.array([_mismatch(E, x, V, m, hbar, 1e-10) for E in Es])
    idx = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
    roots = []
    for i in idx[:n_states]:
        a, b, fa = Es[i], Es[i + 1], f[i]
        while b - a > rtol * max(abs(a), abs(b), np.finfo(float).tiny):
            c = 0.5 * (a + b)
            fc = _mismatch(c, x, V, m, hbar, 1e-10)
            if fc == 0.0:
                a = b = c
                break
            if np.sign(fc) == np.sign(fa):
                a, fa = c, fc
            else:
                b = c
        roots.append(0.5 * (a + b))
    if len(roots) < n_states:
        raise NotEnoughStatesError(f"found {len(roots)} eigenvalues in [{lo:.6g}, {hi:.6g}], need {n_states}")
    return np.array(roots)


def numerov_state(x, V, E: float, m: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    """Normalised wavefunction at a converged energy, left and right halves joined at the match point."""
    x = np.asarray(x, dtype=float)
    V = np.asarray(V, dtype=float)
    dx = x[1] - x[0]
    g = 2.0 * m * (V - E) / hbar ** 2
    allowed = np.nonzero(V <= E)[0]
    mpt = min(max(int(allowed[-1]) if allowed.size else int(np.argmin(V)), 1), x.size - 3)
    left = numerov_integrate(g[: mpt + 1], 0.0, 1e-10, dx)
    right = numerov_integrate(g[mpt:], 0.0, 1e-10, dx, "backward")
    psi = np.concatenate([left, right[1:] * left[-1] / right[0]])
    return psi / np.sqrt(np.sum(psi ** 2) * dx)
