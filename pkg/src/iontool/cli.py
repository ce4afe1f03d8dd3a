"""Scenario-driven command line: ``iontool <command> --config <path> [--out <dir>] [--verbose]``.

Each ``run_*`` function takes a parsed :class:`ScenarioConfig` and an output
directory, writes its CSV files plus ``summary.json``, and returns the
summary dict.  Exit codes: 0 success, 2 configuration error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import io
from .config import COMMANDS, ScenarioConfig, dumps, load_config
from .errors import ConfigError, InvalidArgumentError, MonotonicityWarning, NumericalError
from .trapmodel import IonSpecies

log = logging.getLogger("iontool")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


# ------------------------------------------------------------ builders --
def ion_species(cfg: ScenarioConfig) -> IonSpecies:
    return IonSpecies.from_amu(cfg.ion.mass_amu, cfg.ion.charge_e)


def build_trap(cfg: ScenarioConfig):
    """Mesh and assemble the built-in segmented trap; returns (geometry, system)."""
    from .fieldsolve import QuadratureOptions, TrapLayout, assemble_bem, five_segment_trap
    t = cfg.trap
    layout = TrapLayout(t.rod_radius_mm * 1e-3, t.axis_clearance_mm * 1e-3, t.segment_width_mm * 1e-3,
                        t.n_segments, t.n_phi, t.n_per_segment)
    geom = five_segment_trap(layout, refine=t.refine)
    log.info("assembling BEM system for %d elements", len(geom.triangles))
    return geom, assemble_bem(geom, QuadratureOptions(n_points=t.quadrature_points))


def _voltage_vector(names, voltages: dict, where: str) -> np.ndarray:
    unknown = sorted(set(voltages) - set(names))
    if unknown:
        raise ConfigError(f"{where}: unknown electrode(s) {', '.join(unknown)}; trap has {', '.join(names)}")
    return np.array([voltages.get(n, 0.0) for n in names])


def _check_len(values, n, where):
    if len(values) != n:
        raise ConfigError(f"{where}: expected {n} entries, got {len(values)}")


def fitted_trap_quadrupole(system, dc_voltages: dict, halfwidth: float, n_points: int = 5):
    """Quadrupole coefficients of the BEM trap from fits on a cube of samples at the centre.

    The dc coefficients belong to the pattern ``dc_voltages`` (use
    ``U_dc = 1`` in the drive); the rf ones to 1 V on the rf electrode.
    """
    from .fieldsolve import evaluate_potential, unit_solutions
    from .trapmodel import QuadrupoleCoefficients, fit_quadrupole
    names = system.geometry.electrode_names
    u = _voltage_vector(names, dc_voltages, "dc_voltages_v")
    g = np.linspace(-halfwidth, halfwidth, n_points)
    pts = np.array(np.meshgrid(g, g, g, indexing="ij")).reshape(3, -1).T
    phi = evaluate_potential(system, unit_solutions(system), pts)
    return QuadrupoleCoefficients.projected(fit_quadrupole(pts, phi @ u), fit_quadrupole(pts, phi[:, names.index("rf")]))


# ------------------------------------------------------------ commands --
def run_fields(cfg: ScenarioConfig, out: Path) -> dict:
    """Per-electrode axis potentials, the configured combination and the radial pseudopotential."""
    from .fieldsolve import axis_points, evaluate_field, evaluate_potential, unit_solutions
    from .trapmodel import pseudopotential
    s = cfg.section
    geom, system = build_trap(cfg)
    names = geom.electrode_names
    u = _voltage_vector(names, s.voltages_v, "fields.voltages_v")
    sols = unit_solutions(system)
    x = np.linspace(s.axis_min_mm, s.axis_max_mm, s.axis_points) * 1e-3
    pts = axis_points(x)
    phi = evaluate_potential(system, sols, pts)
    for k, n in enumerate(names):
        io.write_potential(out / f"electrode_{n}.csv", pts, phi[:, k])
    combined = phi @ u
    io.write_potential(out / "axis_potential.csv", pts, combined)

    r = np.linspace(-s.radial_halfwidth_mm, s.radial_halfwidth_mm, s.radial_points) * 1e-3
    Y, Z = np.meshgrid(r, r, indexing="ij")
    plane = np.column_stack([np.zeros(Y.size), Y.ravel(), Z.ravel()])
    grad = s.u_rf_v * evaluate_field(system, sols[names.index("rf")], plane)
    psi = pseudopotential(grad, ion_species(cfg), 2 * np.pi * s.f_rf_mhz * 1e6)
    io.write_potential(out / "pseudopotential.csv", plane, psi)

    peaks = {n: float(x[np.argmax(np.abs(phi[:, k]))]) for k, n in enumerate(names)}
    i_min = int(np.argmin(psi))
    return {"electrodes": names, "axis_peak_position_m": peaks, "voltages_v": s.voltages_v,
            "axis_potential_range_v": [float(combined.min()), float(combined.max())],
            "pseudopotential_minimum_m": plane[i_min].tolist(), "pseudopotential_minimum_v": float(psi[i_min]),
            "elements": int(len(geom.triangles))}


def run_trajectory(cfg: ScenarioConfig, out: Path) -> dict:
    """Single-ion trajectory in the fitted trap, a harmonic well or free space."""
    from .classint import (ForceField, PhaseState, energy_series, excursion_halves, harmonic_field,
                           integrate_fixed, oscillation_frequency, quadrupole_field, relative_energy_drift)
    from .trapmodel import TrapDrive, axial_frequency, mathieu_parameters, secular_frequency
    s = cfg.section
    _check_len(s.x0_um, 3, "trajectory.x0_um")
    _check_len(s.v0_m_s, 3, "trajectory.v0_m_s")
    if s.steps < 1 or s.duration_us <= 0 or s.stride < 1:
        raise ConfigError("trajectory: need steps >= 1, stride >= 1 and duration_us > 0")
    ion = ion_species(cfg)
    summary = {}
    predicted = {}
    if s.field == "trap":
        _, system = build_trap(cfg)
        coeffs = fitted_trap_quadrupole(system, s.dc_voltages_v, s.fit_halfwidth_um * 1e-6, s.fit_points)
        drive = TrapDrive(s.u_rf_v, 2 * np.pi * s.f_rf_mhz * 1e6, 1.0)
        mp = mathieu_parameters(ion, drive, coeffs)
        predicted = {ax: secular_frequency(mp[ax], drive.omega_rf) / (2 * np.pi) for ax in "yz"}
        predicted["x"] = axial_frequency(ion, 1.0, coeffs.alpha_dc) / (2 * np.pi)
        summary["mathieu"] = {ax: {"a": mp[ax].a, "q": mp[ax].q} for ax in "yz"}
        summary["coefficients_per_m2"] = {"dc": coeffs.dc.tolist(), "rf": coeffs.rf.tolist()}
        field_ = quadrupole_field(ion, coeffs, drive)
        rf_period = 2 * np.pi / drive.omega_rf
    elif s.field == "harmonic":
        w = 2 * np.pi * s.harmonic_f_khz * 1e3
        field_ = harmonic_field(w, ion.mass)
        predicted = {ax: w / (2 * np.pi) for ax in "xyz"}
        rf_period = None
    else:
        field_ = ForceField(lambda t, x: np.zeros_like(x), lambda t, x: 0.0, masses=np.asarray(ion.mass))
        rf_period = None
    h = s.duration_us * 1e-6 / s.steps
    state = PhaseState(0.0, np.array(s.x0_um) * 1e-6, s.v0_m_s)
    traj = integrate_fixed(state, field_, h, s.steps, s.method, s.stride)
    io.write_trajectory(out / "trajectory.csv", traj)
    E = energy_series(traj, field_)
    kin = np.array([0.5 * ion.mass * float(np.sum(st.v ** 2)) for st in traj.states])
    io.write_csv(out / "energy.csv", ["t", "kinetic", "potential", "total"], [traj.times, kin, E - kin, E])

    first, second = excursion_halves(traj)
    summary.update({"field": s.field, "method": s.method, "step_s": h, "steps": s.steps,
                    "max_radial_excursion_m": max(first, second),
                    "radial_excursion_halves_m": [first, second],
                    "final_position_m": traj.final.x.tolist()})
    if E[0] != 0 and not field_.rf_modulated:
        summary["relative_energy_drift"] = relative_energy_drift(E)
    if predicted:
        measured = {}
        for k, ax in enumerate("xyz"):
            try:
                measured[ax] = oscillation_frequency(traj.times, traj.x[:, k], rf_period)
            except InvalidArgumentError:
                measured[ax] = None
        summary["frequency_hz"] = {"predicted": predicted, "measured": measured}
        summary["frequency_deviation"] = {ax: (measured[ax] / predicted[ax] - 1 if measured[ax] else None)
                                          for ax in predicted}
    return summary


def run_voltages(cfg: ScenarioConfig, out: Path) -> dict:
    """Tikhonov voltages placing a fixed-curvature well at each configured position."""
    from .fieldsolve import axis_points, evaluate_potential, unit_solutions
    from .inversevolt import BasisMatrix, WaveformConfig, fitted_curvature, transport_waveforms
    s = cfg.section
    _check_len(s.bounds_v, 2, "voltages.bounds_v")
    geom, system = build_trap(cfg)
    missing = sorted(set(s.electrodes) - set(geom.electrode_names))
    if missing:
        raise ConfigError(f"voltages.electrodes: unknown electrode(s) {', '.join(missing)}")
    x = np.linspace(s.axis_min_mm, s.axis_max_mm, s.axis_points) * 1e-3
    basis = BasisMatrix(evaluate_potential(system, unit_solutions(system, s.electrodes), axis_points(x)), x,
                        list(s.electrodes))
    delta = s.delta_v_per_mm2 * 1e6
    centers = np.array(s.positions_mm) * 1e-3
    roi = s.roi_halfwidth_mm * 1e-3
    wave = transport_waveforms(basis, centers, delta,
                               WaveformConfig(bounds=tuple(s.bounds_v), max_step=s.max_step_v, roi_halfwidth=roi))
    io.write_waveform(out / "waveform.csv", wave.voltages, s.electrodes)
    wells = basis.A @ wave.voltages.T
    io.write_csv(out / "well_potentials.csv", ["x"] + [f"well_{k + 1}" for k in range(centers.size)],
                 [x] + list(wells.T))
    curv = np.array([fitted_curvature(basis, u, c, roi) for u, c in zip(wave.voltages, centers)])
    minima = np.array([x[basis.rows(c, roi)][np.argmin(w[basis.rows(c, roi)])] for w, c in zip(wells.T, centers)])
    return {"electrodes": list(s.electrodes), "positions_m": centers, "alphas": wave.alphas,
            "requested_delta_v_per_m2": delta, "fitted_delta_v_per_m2": curv,
            "max_curvature_deviation": float(np.max(np.abs(curv / delta - 1))),
            "voltage_range_v": [float(wave.voltages.min()), float(wave.voltages.max())],
            "within_bounds": bool(np.all((wave.voltages >= s.bounds_v[0] - 1e-12)
                                         & (wave.voltages <= s.bounds_v[1] + 1e-12))),
            "sampled_minima_m": minima}


def _eigen_grid(s):
    from .qdyn import SpatialGrid, optimal_grid_points
    half = 0.5 * s.grid_length_x0
    v_max = 0.5 * half ** 2 + getattr(s, "quartic_hw", 0.0) * half ** 4
    N = s.grid_points
    if N is None:
        N = optimal_grid_points(v_max, s.grid_length_x0, beta=getattr(s, "beta", 0.9))
        N += N % 2
    return SpatialGrid.centered(s.grid_length_x0, N)


def _numerov_lowest(x, V, n_states: int):
    """Numerov roots, scanning upward in windows of growing width (oscillator units)."""
    from .errors import NotEnoughStatesError
    from .qdyn import numerov_eigenvalues
    lo, top = float(V.min()), float(min(V[0], V[-1]))
    span = 2.0 * n_states
    while True:
        hi = min(lo + span, top)
        try:
            return numerov_eigenvalues(x, V, n_states=n_states, E_range=(lo, hi), n_scan=100 * n_states)
        except NotEnoughStatesError:
            if hi >= top:
                raise
            span *= 2.0


def run_eigen(cfg: ScenarioConfig, out: Path) -> dict:
    """Lowest eigenvalues of V = x^2/2 + c x^4 (oscillator units) by the Fourier grid and by Numerov."""
    from .qdyn import eigenstates
    s = cfg.section
    if s.n_states < 1:
        raise ConfigError("eigen.n_states must be >= 1")
    grid = _eigen_grid(s)
    x = grid.x
    V = 0.5 * x ** 2 + s.quartic_hw * x ** 4
    summary = {"grid_points": grid.N, "grid_length_x0": grid.L, "dx": grid.dx}
    exact = np.arange(s.n_states) + 0.5
    t0 = time.perf_counter()
    if s.method in ("both", "fourier"):
        E = eigenstates(grid, V, n_states=s.n_states).energies
        io.write_eigen(out / "eigen_fourier.csv", E)
        summary["fourier"] = {"energies_hw": E, "seconds": time.perf_counter() - t0}
        if s.quartic_hw == 0:
            summary["fourier"]["max_relative_error"] = float(np.max(np.abs(E / exact - 1)))
    t0 = time.perf_counter()
    if s.method in ("both", "numerov"):
        E = _numerov_lowest(x, V, s.n_states)
        io.write_eigen(out / "eigen_numerov.csv", E)
        summary["numerov"] = {"energies_hw": E, "seconds": time.perf_counter() - t0}
        if s.quartic_hw == 0:
            summary["numerov"]["max_relative_error"] = float(np.max(np.abs(E / exact - 1)))
    if s.quartic_hw == 0:
        summary["analytic_hw"] = exact
    return summary


def run_propagate(cfg: ScenarioConfig, out: Path) -> dict:
    """Wavepacket in the oscillator V = x^2/2 (oscillator units, time in 1/omega)."""
    from .qdyn import (gaussian, grid_hamiltonian, harmonic_ground_state, normalize, propagate_chebyshev,
                       propagate_split_operator, spectral_bounds)
    s = cfg.section
    if s.steps < 0 or s.dt_inv_omega <= 0:
        raise ConfigError("propagate: need steps >= 0 and dt_inv_omega > 0")
    grid = _eigen_grid(s)
    V = 0.5 * grid.x ** 2
    if s.initial == "ground":
        psi0 = harmonic_ground_state(grid, s.x_initial_x0)
    else:
        psi0 = normalize(gaussian(grid, s.x_initial_x0, s.sigma_x0, s.k_initial_inv_x0), grid)
    H = grid_hamiltonian(grid, V)
    if s.method == "chebyshev":
        lo, hi = spectral_bounds(grid, V)
        psi = propagate_chebyshev(psi0, H, lo, hi, s.dt_inv_omega, s.steps,
                                  norm=lambda v: np.sqrt(np.sum(np.abs(v) ** 2) * grid.dx))
    else:
        psi = propagate_split_operator(psi0, grid, V, s.dt_inv_omega, s.steps)
    io.write_wavefunction(out / "wavefunction_initial.csv", grid.x, psi0)
    io.write_wavefunction(out / "wavefunction.csv", grid.x, psi)
    t = s.dt_inv_omega * s.steps
    E0 = float(np.real(np.vdot(psi0, H(psi0)) * grid.dx))
    norm = float(np.sum(np.abs(psi) ** 2) * grid.dx)
    p = np.abs(psi) ** 2 * grid.dx
    c = np.vdot(psi0, psi) * grid.dx
    summary = {"grid_points": grid.N, "time_inv_omega": t, "method": s.method, "steps": s.steps,
               "norm_error": abs(norm - 1.0), "energy_hw": E0, "mean_position_x0": float(np.sum(grid.x * p)),
               "autocorrelation": [float(c.real), float(c.imag)]}
    if s.initial == "ground" and s.x_initial_x0 == 0:
        summary["stationary_phase_error"] = float(abs(c - np.exp(-1j * E0 * t)))
    return summary


def _optimizer_result(trace, start: float):
    dJ = np.diff(trace.J)
    return {"initial_fidelity": trace.fidelity[0], "final_fidelity": trace.fidelity[-1],
            "iterations": trace.iterations, "monotone": trace.is_monotone(),
            "max_J_increase": float(dJ.max()) if dJ.size else 0.0, "stop_reason": trace.message,
            "seconds": time.perf_counter() - start}


def _run_optimizer(problem, guess, s, kind: str):
    from .krotov import gradient_optimize, krotov_state_to_state, krotov_unitary
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", MonotonicityWarning)
        if s.optimizer == "gradient":
            controls, trace = gradient_optimize(problem, guess, s.iterations, target=s.target_fidelity)
        else:
            run = krotov_state_to_state if kind == "state" else krotov_unitary
            controls, trace = run(problem, guess, s.iterations, target=s.target_fidelity,
                                  adapt_lambda=s.adapt_lambda)
    for w in caught:
        log.warning("%s", w.message)
    return controls, trace, len([w for w in caught if issubclass(w.category, MonotonicityWarning)])


def run_optimize_transport(cfg: ScenarioConfig, out: Path) -> dict:
    """BEM trap -> axis basis -> Tikhonov guess -> optimal control of the wavepacket transport."""
    from .krotov import motional_excitation, trap_transport_setup
    s = cfg.section
    _check_len(s.bounds_v, 2, "transport.bounds_v")
    if s.iterations < 0 or s.dt_inv_omega <= 0 or s.duration_periods <= 0:
        raise ConfigError("transport: need iterations >= 0, dt_inv_omega > 0, duration_periods > 0")
    geom, system = build_trap(cfg)
    missing = sorted(set(s.electrodes) - set(geom.electrode_names))
    if missing:
        raise ConfigError(f"transport.electrodes: unknown electrode(s) {', '.join(missing)}")
    ion = ion_species(cfg)
    setup = trap_transport_setup(system, list(s.electrodes), ion, s.delta_v_per_mm2 * 1e6, s.distance_x0,
                                 2 * np.pi * s.duration_periods, s.dt_inv_omega,
                                 roi_halfwidth=s.roi_halfwidth_um * 1e-6, n_axis=s.axis_points,
                                 bounds=tuple(s.bounds_v), grid_length=s.grid_length_x0, grid_points=s.grid_points,
                                 lam=s.krotov_lambda, shaped=s.shape == "sin2", method=s.propagator)
    problem, guess, grid = setup.problem, setup.guess, setup.grid
    t_unit = 1.0 / setup.info["omega"]
    start = time.perf_counter()
    controls, trace, n_warn = _run_optimizer(problem, guess, s, "state")
    summary = _optimizer_result(trace, start)
    psi_T = problem.propagate(controls.values)[0]
    V_end = problem.dynamics.potential(controls.values[:, -1])
    io.write_controls(out / "guess.csv", guess.times * t_unit, guess.values)
    io.write_controls(out / "controls.csv", controls.times * t_unit, controls.values)
    io.write_trace(out / "trace.csv", trace)
    io.write_wavefunction(out / "wavefunction.csv", grid.x, psi_T)
    summary.update({"optimizer": s.optimizer, "monotonicity_warnings": n_warn, "electrodes": list(s.electrodes),
                    "omega_rad_s": setup.info["omega"], "oscillator_length_m": setup.info["x0"],
                    "distance_m": s.distance_x0 * setup.info["x0"], "duration_s": problem.T * t_unit,
                    "control_steps": problem.n_steps, "grid_points": grid.N, "grid_length_x0": grid.L,
                    "final_lambda": trace.lambdas[-1] if trace.lambdas else None,
                    "norm_error": abs(float(np.sum(np.abs(psi_T) ** 2) * grid.dx) - 1.0),
                    "mean_excitation": motional_excitation(grid, V_end, psi_T),
                    "voltage_range_v": [float(controls.values.min()), float(controls.values.max())]})
    return summary


def run_optimize_gate(cfg: ScenarioConfig, out: Path) -> dict:
    """Composite-pulse benchmark and laser-phase optimisation of the controlled-phase gate."""
    from .krotov import ControlSet, GateModel, composite_pulse_gate, composite_sequence, sin2_shape
    s = cfg.section
    for k, r in enumerate(s.rotations_pi):
        if not isinstance(r, list) or len(r) != 2:
            raise ConfigError(f"gate.rotations_pi[{k}]: expected [angle_pi, phase_pi]")
    if not s.rotations_pi:
        raise ConfigError("gate.rotations_pi: the horizon is the composite duration, so it cannot be empty")
    model = GateModel(s.grid_length_x0, s.grid_points, s.eta, s.rabi_over_trap,
                      stark_compensation=s.stark_compensation, dt=s.dt_inv_omega, propagator=s.propagator)
    seq = composite_sequence(model, [(a * np.pi, p * np.pi) for a, p in s.rotations_pi])
    _, F_comp = composite_pulse_gate(seq, model)
    T = sum(d for d, _ in seq)
    problem = model.problem(T)
    guess = ControlSet(np.zeros((1, problem.n_steps)), problem.dt, lambdas=s.krotov_lambda,
                       shape=sin2_shape(problem.n_steps))
    start = time.perf_counter()
    controls, trace, n_warn = _run_optimizer(problem, guess, s, "phase")
    summary = _optimizer_result(trace, start)
    io.write_controls(out / "controls.csv", controls.times, controls.values)
    io.write_trace(out / "trace.csv", trace)
    io.write_csv(out / "composite.csv", ["duration", "phase"],
                 [np.array([d for d, _ in seq]), np.array([p for _, p in seq])])
    summary.update({"optimizer": s.optimizer, "monotonicity_warnings": n_warn, "composite_fidelity": F_comp,
                    "fidelity_gain": trace.fidelity[-1] - trace.fidelity[0], "horizon_inv_omega": T,
                    "control_steps": problem.n_steps, "sideband_rabi": model.sideband_rabi,
                    "detuning": model.detuning, "level_shifts": list(model.level_shifts)})
    return summary


RUNNERS = {
    "fields": run_fields, "trajectory": run_trajectory, "voltages": run_voltages, "eigen": run_eigen,
    "propagate": run_propagate, "optimize-transport": run_optimize_transport, "optimize-gate": run_optimize_gate,
}


def run(cfg: ScenarioConfig, out) -> dict:
    """Run one scenario and write ``summary.json`` (and the canonical config) into ``out``."""
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    start = time.perf_counter()
    summary = RUNNERS[cfg.command](cfg, out)
    summary = {"command": cfg.command, "elapsed_s": time.perf_counter() - start, **summary}
    (out / "config.json").write_text(dumps(cfg))
    io.write_summary(out / "summary.json", summary)
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="iontool", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--out", default=None, help="output directory (default ./iontool-out/<command>)")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out) if args.out else Path("iontool-out") / args.command
    try:
        cfg = load_config(args.config)
        if cfg.command != args.command:
            raise ConfigError(f"{args.config} describes command {cfg.command!r}, not {args.command!r}")
        summary = run(cfg, out)
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"iontool: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"iontool: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.verbose:
        print(f"wrote {out}/summary.json in {summary['elapsed_s']:.2f} s")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
