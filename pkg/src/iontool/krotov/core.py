"""Objective functionals, control containers and the two optimisers.

A control problem bundles S initial and goal states with a ``dynamics``
object that knows how to advance a batch of states over one time interval
for given piecewise-constant control values, and how to apply the control
derivatives dH/d eps_i.  Everything else here is independent of what the
states are (grid wavefunctions, spinors, small vectors).

Conventions: hbar = 1, J = -F with F the fidelity of the chosen objective.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateGuessError, InvalidArgumentError, MonotonicityWarning

PLATEAU_TOL = 1e-12


# ------------------------------------------------------------ objectives --
def fidelity(psi_T, phi, dx: float = 1.0) -> float:
    """|<phi|psi_T>|^2 for normalised states sampled with measure ``dx``."""
    ov = np.sum(np.conj(np.asarray(phi)) * np.asarray(psi_T)) * dx
    return float(min(abs(ov) ** 2, 1.0))


def phase_fidelity(states, goals, dx: float = 1.0) -> float:
    """Phase-sensitive gate fidelity (1/2S) Re sum_s <phi_s|psi_s(T)> + 1/2.

    For the four gate basis states this is (1/8) Re sum + 1/2.  The real
    part makes the objective real and maximal only for the correct phases.
    """
    states = np.asarray(states)
    goals = np.asarray(goals)
    if states.shape != goals.shape:
        raise InvalidArgumentError("states and goals must have the same shape")
    S = states.shape[0]
    ov = np.sum(np.conj(goals) * states, axis=tuple(range(1, states.ndim))) * dx
    return float(np.real(ov.sum()) / (2 * S) + 0.5)


def sin2_shape(n_steps: int) -> np.ndarray:
    """Update shape sin^2(pi t/T) at the interval midpoints."""
    t = (np.arange(n_steps) + 0.5) / n_steps
    return np.sin(np.pi * t) ** 2


# --------------------------------------------------------------- types --
@dataclass
class ControlSet:
    """Piecewise-constant controls eps_i(t_n), one row per control.

    Parameters
    ----------
    values : ndarray, shape (n_controls, n_steps)
    dt : float
        Interval length.
    lambdas : array_like, optional
        Krotov step weights, default 1.
    shape : ndarray, optional
        Update shape S(t_n) in [0, 1]; default all ones.
    """

    values: np.ndarray
    dt: float
    lambdas: np.ndarray | None = None
    shape: np.ndarray | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[1] < 1:
            raise InvalidArgumentError("controls must be an (n_controls, n_steps) array")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("control samples must be finite")
        if not self.dt > 0:
            raise InvalidArgumentError("dt must be positive")
        lam = np.ones(v.shape[0]) if self.lambdas is None else np.broadcast_to(
            np.asarray(self.lambdas, dtype=float), (v.shape[0],)).copy()
        if np.any(~(lam > 0)) or np.any(~np.isfinite(lam)):
            raise InvalidArgumentError("update weights lambda_i must be positive")
        S = np.ones(v.shape[1]) if self.shape is None else np.asarray(self.shape, dtype=float)
        if S.shape != (v.shape[1],) or np.any(S < 0) or np.any(S > 1):
            raise InvalidArgumentError("update shape must hold one value in [0, 1] per step")
        self.values, self.lambdas, self.shape = v, lam, S

    @property
    def n_controls(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        """Left interval nodes t_n."""
        return self.dt * np.arange(self.n_steps)

    def copy(self, values=None, lambdas=None) -> "ControlSet":
        return ControlSet(self.values.copy() if values is None else values, self.dt,
                          self.lambdas.copy() if lambdas is None else lambdas, self.shape.copy())


@dataclass
class ControlProblem:
    """S initial states, S goal states and the controlled dynamics.

    Parameters
    ----------
    initial, targets : ndarray, shape (S, ...)
        Normalised with respect to ``dynamics.overlap``.
    dynamics : object
        Provides ``step(states, eps, n, backward=False, fraction=1.0)``,
        ``apply_dH(states, i, eps, n)``, ``overlap(a, b) -> (S,)`` and
        optionally ``prepare(values)`` called before each sweep.
    n_steps : int
    dt : float
    objective : {"state", "phase"}
        "state" averages |<phi_s|psi_s(T)>|^2; "phase" is the gate fidelity.
    """

    initial: np.ndarray
    targets: np.ndarray
    dynamics: object
    n_steps: int
    dt: float
    objective: str = "state"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.initial = np.asarray(self.initial, dtype=complex)
        self.targets = np.asarray(self.targets, dtype=complex)
        if self.initial.shape != self.targets.shape or self.initial.ndim < 2:
            raise InvalidArgumentError("initial and target states must both have shape (S, ...)")
        if self.objective not in ("state", "phase"):
            raise InvalidArgumentError("objective must be 'state' or 'phase'")
        for name, arr in (("initial", self.initial), ("target", self.targets)):
            n = np.real(self.dynamics.overlap(arr, arr))
            if np.any(np.abs(n - 1.0) > 1e-8):
                raise InvalidArgumentError(f"{name} states must be normalised (norms {n})")

    @property
    def n_states(self) -> int:
        return self.initial.shape[0]

    @property
    def T(self) -> float:
        return self.n_steps * self.dt

    # -- evaluation ---------------------------------------------------
    def _prepare(self, values):
        prep = getattr(self.dynamics, "prepare", None)
        if prep is not None:
            prep(values)

    def propagate(self, values, store: bool = False):
        """Forward propagation; returns psi(T) or all nodes (n_steps+1, S, ...)."""
        values = np.asarray(values, dtype=float)
        self._prepare(values)
        psi = self.initial.copy()
        out = [psi] if store else None
        for n in range(self.n_steps):
            psi = self.dynamics.step(psi, values[:, n], n)
            if store:
                out.append(psi)
        return np.array(out) if store else psi

    def overlaps(self, psi_T) -> np.ndarray:
        return self.dynamics.overlap(self.targets, psi_T)

    def fidelity_of(self, psi_T) -> float:
        tau = self.overlaps(psi_T)
        if self.objective == "state":
            return float(np.mean(np.abs(tau) ** 2))
        return float(np.real(tau.sum()) / (2 * self.n_states) + 0.5)

    def evaluate(self, values):
        """(J, F) for the given control samples."""
        F = self.fidelity_of(self.propagate(values))
        return -F, F

    def costate_boundary(self, psi_T) -> np.ndarray:
        """chi_s(T): phi_s <phi_s|psi_s(T)> for "state", phi_s for "phase"."""
        if self.objective == "phase":
            return self.targets.copy()
        tau = self.overlaps(psi_T)
        if np.all(np.abs(tau) < 1e-14):
            raise DegenerateGuessError("the guess has zero overlap with the goal at T; chi(T) would vanish")
        return self.targets * tau.reshape((-1,) + (1,) * (self.targets.ndim - 1))

    def _weight(self) -> float:
        # dF = w sum_s Re <chi_s(T)| d psi_s(T)>
        return 2.0 / self.n_states if self.objective == "state" else 1.0 / (2 * self.n_states)

    def backward(self, values, chi_T):
        """chi(t_n) for n = 0..n_steps, propagated backwards with ``values``."""
        chi = np.empty((self.n_steps + 1,) + chi_T.shape, dtype=complex)
        chi[-1] = chi_T
        for n in range(self.n_steps - 1, -1, -1):
            chi[n] = self.dynamics.step(chi[n + 1], values[:, n], n, backward=True)
        return chi

    def gradient(self, values) -> np.ndarray:
        """dJ/d eps_i(t_n) for the discrete problem.

        The derivative of one interval propagator is the integral of
        U(dt-s) dH U(s) over the interval, evaluated by Simpson's rule with
        one half-step propagation on each side.
        """
        values = np.asarray(values, dtype=float)
        psi = self.propagate(values, store=True)
        chi = self.backward(values, self.costate_boundary(psi[-1]))
        d = self.dynamics
        g = np.zeros_like(values)
        w = self._weight() * self.dt / 6.0
        for n in range(self.n_steps):
            eps = values[:, n]
            pm = d.step(psi[n], eps, n, fraction=0.5)
            cm = d.step(chi[n + 1], eps, n, backward=True, fraction=0.5)
            for i in range(values.shape[0]):
                val = (d.overlap(chi[n], d.apply_dH(psi[n], i, eps, n))
                       + 4.0 * d.overlap(cm, d.apply_dH(pm, i, eps, n))
                       + d.overlap(chi[n + 1], d.apply_dH(psi[n + 1], i, eps, n)))
                g[i, n] = -w * np.imag(val.sum())
        return g


@dataclass
class OptimizationTrace:
    """Per-iteration objective and fidelity; entry 0 is the guess."""

    J: list = field(default_factory=list)
    fidelity: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    message: str = ""

    def append(self, J, F, lam=None, snapshot=None):
        self.J.append(float(J))
        self.fidelity.append(float(F))
        if lam is not None:
            self.lambdas.append(np.array(lam, dtype=float))
        if snapshot is not None:
            self.snapshots.append(np.array(snapshot))

    @property
    def iterations(self) -> int:
        return len(self.J) - 1

    def is_monotone(self, tol: float = PLATEAU_TOL) -> bool:
        """True when J never increases by more than ``tol``."""
        return bool(np.all(np.diff(self.J) < tol))

    def rows(self):
        return [(k, J, F) for k, (J, F) in enumerate(zip(self.J, self.fidelity))]


# ------------------------------------------------------------ Krotov --
def _krotov_sweep(problem: ControlProblem, controls: ControlSet, chi):
    """Forward sweep with immediate updates; returns (new values, psi(T))."""
    d = problem.dynamics
    new = controls.values.copy()
    psi = problem.initial.copy()
    lam = controls.lambdas
    for n in range(problem.n_steps):
        eps_old = controls.values[:, n]
        for i in range(controls.n_controls):
            # dH/d eps_i at the old control; exact for controls entering linearly
            im = np.imag(d.overlap(chi[n], d.apply_dH(psi, i, eps_old, n)).sum())
            new[i, n] = eps_old[i] + controls.shape[n] * 2.0 / lam[i] * im
        psi = d.step(psi, new[:, n], n)
    return new, psi


def krotov_optimize(problem: ControlProblem, guess: ControlSet, iterations: int, target: float | None = None,
                    adapt_lambda: bool = False, max_retries: int = 8, store_controls: bool = False,
                    callback=None):
    """Krotov iterations with the immediate-update scheme.

    chi is propagated backwards with the old controls, psi forwards with the
    new ones, and eps_i(t_n) is updated from Im <chi^k(t_n)| dH/d eps_i
    |psi^{k+1}(t_n)> before psi leaves t_n.

    Parameters
    ----------
    target : float, optional
        Stop once the fidelity reaches this value.
    adapt_lambda : bool
        On a step that raises J, double all lambda_i and redo the iteration
        (up to ``max_retries`` times) instead of only warning.

    Returns
    -------
    (ControlSet, OptimizationTrace)
    """
    if problem.n_steps != guess.n_steps:
        raise InvalidArgumentError("control grid does not match the problem's time steps")
    controls = guess.copy()
    psi_T = problem.propagate(controls.values)
    F = problem.fidelity_of(psi_T)
    trace = OptimizationTrace()
    trace.append(-F, F, controls.lambdas, controls.values if store_controls else None)
    for k in range(iterations):
        if target is not None and F >= target:
            trace.message = f"fidelity target {target} reached"
            break
        chi = problem.backward(controls.values, problem.costate_boundary(psi_T))
        for attempt in range(max_retries + 1):
            problem._prepare(controls.values)
            new, psi_new = _krotov_sweep(problem, controls, chi)
            F_new = problem.fidelity_of(psi_new)
            if -F_new < -F + PLATEAU_TOL or not adapt_lambda or attempt == max_retries:
                break
            controls = controls.copy(lambdas=controls.lambdas * 2.0)
        if -F_new >= -F + PLATEAU_TOL:
            warnings.warn(f"Krotov iteration {k + 1} raised J from {-F:.12g} to {-F_new:.12g}; "
                          f"lambda = {controls.lambdas}, check the propagator accuracy and time step",
                          MonotonicityWarning, stacklevel=2)
        controls = controls.copy(values=new)
        psi_T, F = psi_new, F_new
        trace.append(-F, F, controls.lambdas, controls.values if store_controls else None)
        if callback is not None:
            callback(k + 1, F, controls)
    else:
        trace.message = "iteration cap reached"
    if not trace.message:
        trace.message = "iteration cap reached"
    return controls, trace


def krotov_state_to_state(problem: ControlProblem, guess: ControlSet, iterations: int, **kwargs):
    """Krotov optimisation of |<phi|psi(T)>|^2 (see :func:`krotov_optimize`)."""
    if problem.objective != "state":
        raise InvalidArgumentError("state-to-state optimisation needs objective='state'")
    return krotov_optimize(problem, guess, iterations, **kwargs)


def krotov_unitary(problem: ControlProblem, guess: ControlSet, iterations: int, **kwargs):
    """Krotov optimisation of the phase-sensitive gate fidelity.

    Each basis state gets its own costate with chi_s(T) = phi_s; the update
    sums the Im-terms over all of them.
    """
    if problem.objective != "phase":
        raise InvalidArgumentError("gate optimisation needs objective='phase'")
    return krotov_optimize(problem, guess, iterations, **kwargs)


# ---------------------------------------------------------- gradient --
def gradient_optimize(problem, guess: ControlSet, iterations: int, gamma0: float | None = None,
                      armijo: float = 1e-4, backtrack: float = 0.5, grow: float = 1.0, gamma_min: float = 1e-300,
                      target: float | None = None, grad_tol: float = 0.0):
    """Steepest descent eps <- eps - gamma dJ/d eps with backtracking line search.

    ``problem`` needs ``evaluate(values) -> (J, F)`` and
    ``gradient(values) -> dJ/d values``; any :class:`ControlProblem` has both.
    A trial step is accepted when J drops by at least
    ``armijo * gamma * |g|^2``; otherwise gamma is multiplied by
    ``backtrack``.  Each iteration starts from ``gamma0`` times ``grow``
    raised to the number of accepted steps (``grow = 1`` is plain
    backtracking).  The default ``gamma0 = 1/(lambda dt)`` matches the
    nominal Krotov step for the same weights.  The run stops early at a
    vanishing gradient or when gamma drops below ``gamma_min`` relative to
    ``gamma0`` (stagnation).
    """
    controls = guess.copy()
    J, F = problem.evaluate(controls.values)
    trace = OptimizationTrace()
    trace.append(J, F)
    if gamma0 is None:
        gamma0 = 1.0 / (float(np.min(controls.lambdas)) * controls.dt)
    start = float(gamma0)
    for k in range(iterations):
        if target is not None and F >= target:
            trace.message = f"fidelity target {target} reached"
            break
        g = problem.gradient(controls.values) * controls.shape[None, :]
        g2 = float(np.sum(g * g))
        if g2 <= grad_tol ** 2 or g2 == 0.0:
            trace.message = "zero gradient"
            break
        gamma = start
        while gamma >= gamma_min * gamma0:
            trial = controls.values - gamma * g
            J_try, F_try = problem.evaluate(trial)
            if J_try <= J - armijo * gamma * g2 and J_try < J:
                break
            gamma *= backtrack
        else:
            trace.message = "line search stagnated"
            break
        controls = controls.copy(values=trial)
        J, F = J_try, F_try
        trace.append(J, F)
        start *= grow
    else:
        trace.message = "iteration cap reached"
    return controls, trace
