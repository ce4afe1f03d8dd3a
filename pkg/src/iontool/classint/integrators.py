"""One-step integrators for second-order equations of motion x'' = f(t, x).

All steppers take a :class:`PhaseState` and a :class:`ForceField` and return
a new state; inputs are never modified.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import InvalidArgumentError, StepFailure, StiffnessError
from .tableaux import DORMAND_PRINCE, LOBATTO_IIIA_IIIB_3, ButcherTableau, PartitionedTableau

FIXED_POINT_TOL = 1e-13
FIXED_POINT_MAX = 50


@dataclass(frozen=True)
class PhaseState:
    """Time (s), positions and velocities; ``x`` and ``v`` share one shape, e.g. (P, 3)."""

    t: float
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        v = np.array(self.v, dtype=float)
        if x.shape != v.shape:
            raise InvalidArgumentError("x and v must have the same shape")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.x.ravel(), self.v.ravel()])

    @classmethod
    def from_flat(cls, t, y, shape) -> "PhaseState":
        n = int(np.prod(shape))
        return cls(t, y[:n].reshape(shape), y[n:].reshape(shape))


@dataclass
class ForceField:
    """Acceleration field f(t, x) with optional potential energy.

    Parameters
    ----------
    accel : callable
        ``accel(t, x) -> a`` in m/s^2, same shape as ``x``.
    potential : callable, optional
        ``potential(t, x) -> float``, total potential energy in J.
    masses : array_like, optional
        Particle masses (kg) used for kinetic energy; default 1 per particle.
    static : bool
        True when ``accel`` does not depend on t.
    rf_modulated : bool
        True when the field contains an rf drive term.
    """

    accel: Callable
    potential: Callable | None = None
    masses: np.ndarray | None = None
    static: bool = True
    rf_modulated: bool = False

    def __call__(self, t, x):
        return self.accel(t, x)


@dataclass
class Trajectory:
    """Sampled states plus step diagnostics."""

    times: np.ndarray
    states: list
    accepted: int = 0
    rejected: int = 0
    error_estimates: list = field(default_factory=list)

    @property
    def x(self) -> np.ndarray:
        return np.array([s.x for s in self.states])

    @property
    def v(self) -> np.ndarray:
        return np.array([s.v for s in self.states])

    @property
    def final(self) -> PhaseState:
        return self.states[-1]


def _first_order(field_: ForceField, shape):
    n = int(np.prod(shape))

    def F(t, y):
        x = y[:n].reshape(shape)
        return np.concatenate([y[n:], np.asarray(field_(t, x), dtype=float).ravel()])

    return F


def _converged(new, old, scale):
    return np.max(np.abs(new - old)) <= FIXED_POINT_TOL * max(scale, np.finfo(float).tiny)


# --------------------------------------------------------------- Euler --
def step_euler_explicit(state: PhaseState, field_: ForceField, h: float) -> PhaseState:
    """Explicit Euler: x += h v, v += h f(t, x), both from the old state."""
    a = field_(state.t, state.x)
    return PhaseState(state.t + h, state.x + h * state.v, state.v + h * a)


def step_implicit_midpoint(state: PhaseState, field_: ForceField, h: float) -> PhaseState:
    """Implicit midpoint rule solved by fixed-point iteration (tol 1e-13, 50 sweeps)."""
    x0, v0 = state.x, state.v
    tm = state.t + 0.5 * h
    x1, v1 = x0 + h * v0, v0 + h * field_(state.t, x0)
    scale = max(np.max(np.abs(x0)), np.max(np.abs(v0)), np.max(np.abs(x1)), np.max(np.abs(v1)))
    for _ in range(FIXED_POINT_MAX):
        xm, vm = 0.5 * (x0 + x1), 0.5 * (v0 + v1)
        nx, nv = x0 + h * vm, v0 + h * field_(tm, xm)
        done = _converged(nx, x1, scale) and _converged(nv, v1, scale)
        x1, v1 = nx, nv
        if done:
            return PhaseState(state.t + h, x1, v1)
    raise StepFailure(f"implicit midpoint fixed point not converged in {FIXED_POINT_MAX} iterations at t={state.t:.6g}")


# ------------------------------------------------------------ general RK --
def rk_step(F: Callable, t: float, y, h: float, tableau: ButcherTableau):
    """One Runge-Kutta step for the first-order system y' = F(t, y).

    Returns
    -------
    y_new : ndarray
    err : ndarray or None
        ``h * sum_i (b_i - b_err_i) k_i`` when the tableau has embedded weights.
    """
    y = np.asarray(y, dtype=float)
    s = tableau.stages
    A, b, c = tableau.a, tableau.b, tableau.c
    k = np.zeros((s,) + y.shape)
    if tableau.explicit:
        for i in range(s):
            yi = y + h * np.tensordot(A[i, :i], k[:i], axes=1) if i else y
            k[i] = F(t + c[i] * h, yi)
    else:
        f0 = F(t, y)
        k[:] = f0
        scale = max(np.max(np.abs(f0)), np.max(np.abs(y)) / max(abs(h), 1e-300))
        for _ in range(FIXED_POINT_MAX):
            knew = np.array([F(t + c[i] * h, y + h * np.tensordot(A[i], k, axes=1)) for i in range(s)])
            done = _converged(knew, k, scale)
            k = knew
            if done:
                break
        else:
            raise StepFailure("implicit Runge-Kutta stages did not converge")
    y_new = y + h * np.tensordot(b, k, axes=1)
    err = None
    if tableau.b_err is not None:
        # sum(b - b_err) = 0, so subtracting k_0 is exact and keeps err = 0 for constant stages
        err = h * np.tensordot(b - tableau.b_err, k - k[0], axes=1)
    return y_new, err


def step_rk(state, field_, h: float, tableau: ButcherTableau = DORMAND_PRINCE):
    """Runge-Kutta step on a :class:`PhaseState` with a force field.

    Returns
    -------
    (PhaseState, err)
        ``err`` is the embedded error estimate (flattened phase vector) or None.
    """
    F = _first_order(field_, state.x.shape)
    y, err = rk_step(F, state.t, state.flat(), h, tableau)
    return PhaseState.from_flat(state.t + h, y, state.x.shape), err


def integrate_adaptive(state: PhaseState, field_: ForceField, t_end: float, tol: float,
                       h0: float | None = None, tableau: ButcherTableau = DORMAND_PRINCE,
                       h_max: float | None = None, max_steps: int = 10_000_000) -> Trajectory:
    """Adaptive embedded-pair integration to ``t_end``.

    A step is accepted when ``max|err| <= tol * (1 + max|y|)``; the next step
    is scaled by ``0.9 * (tol_eff/err)**(1/5)`` clipped to [0.2, 5].
    """
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    if tableau.b_err is None:
        raise InvalidArgumentError("adaptive integration needs an embedded pair")
    F = _first_order(field_, state.x.shape)
    t, y = state.t, state.flat()
    span = t_end - t
    if span <= 0:
        return Trajectory(np.array([t]), [state])
    h = h0 if h0 is not None else span / 100.0
    h_max = h_max or span
    h = min(h, h_max)
    times, states, errs = [t], [state], []
    acc = rej = 0
    while t < t_end:
        if t + h > t_end:
            h = t_end - t
        if h <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
            raise StiffnessError(f"step size underflow at t={t:.6g}")
        y_new, err = rk_step(F, t, y, h, tableau)
        e = float(np.max(np.abs(err)))
        bound = tol * (1.0 + float(np.max(np.abs(y))))
        if e <= bound:
            t, y = t + h, y_new
            acc += 1
            times.append(t)
            states.append(PhaseState.from_flat(t, y, state.x.shape))
            errs.append(e)
            if acc + rej > max_steps:
                raise StiffnessError("maximum number of steps exceeded")
        else:
            rej += 1
        fac = 5.0 if e == 0.0 else min(5.0, max(0.2, 0.9 * (bound / e) ** 0.2))
        h = min(h * fac, h_max)
    return Trajectory(np.array(times), states, acc, rej, errs)


# ------------------------------------------------------ symplectic pair --
def step_stormer_verlet(state: PhaseState, field_: ForceField, h: float) -> PhaseState:
    """Kick-drift-kick Stormer-Verlet step (force evaluated at t_n and t_{n+1})."""
    vh = state.v + 0.5 * h * field_(state.t, state.x)
    x1 = state.x + h * vh
    v1 = vh + 0.5 * h * field_(state.t + h, x1)
    return PhaseState(state.t + h, x1, v1)


def step_partitioned_rk(state: PhaseState, field_: ForceField, h: float,
                        pair: PartitionedTableau = LOBATTO_IIIA_IIIB_3) -> PhaseState:
    """Partitioned Runge-Kutta step for x' = v, v' = f(t, x).

    Positions use ``pair.pos`` and velocities ``pair.vel``; the coupled stage
    equations are solved by fixed-point iteration.
    """
    A, b, c = pair.pos.a, pair.pos.b, pair.pos.c
    Ap, bp, cp = pair.vel.a, pair.vel.b, pair.vel.c
    s = b.size
    x0, v0 = state.x, state.v
    f0 = field_(state.t, x0)
    K = np.broadcast_to(v0, (s,) + v0.shape).copy()
    L = np.broadcast_to(f0, (s,) + f0.shape).copy()
    scale = max(np.max(np.abs(v0)), np.max(np.abs(f0)), np.finfo(float).tiny)
    for _ in range(FIXED_POINT_MAX):
        X = x0 + h * np.tensordot(A, K, axes=1)
        V = v0 + h * np.tensordot(Ap, L, axes=1)
        Knew = V
        Lnew = np.array([field_(state.t + cp[i] * h, X[i]) for i in range(s)])
        done = _converged(Knew, K, scale) and _converged(Lnew, L, scale)
        K, L = Knew, Lnew
        if done:
            break
    else:
        raise StepFailure("partitioned Runge-Kutta stages did not converge")
    return PhaseState(state.t + h, x0 + h * np.tensordot(b, K, axes=1), v0 + h * np.tensordot(bp, L, axes=1))


STEPPERS = {
    "euler": step_euler_explicit,
    "midpoint": step_implicit_midpoint,
    "verlet": step_stormer_verlet,
    "lobatto": step_partitioned_rk,
    "rk45": lambda s, f, h: step_rk(s, f, h, DORMAND_PRINCE)[0],
}


def integrate_fixed(state: PhaseState, field_: ForceField, h: float, n_steps: int, method: str = "verlet",
                    stride: int = 1) -> Trajectory:
    """Fixed-step integration, storing every ``stride``-th state."""
    try:
        step = STEPPERS[method]
    except KeyError:
        raise InvalidArgumentError(f"unknown integrator {method!r}; choose from {sorted(STEPPERS)}") from None
    states = [state]
    s = state
    for n in range(1, n_steps + 1):
        s = step(s, field_, h)
        if n % stride == 0 or n == n_steps:
            states.append(s)
    return Trajectory(np.array([q.t for q in states]), states, accepted=n_steps)
