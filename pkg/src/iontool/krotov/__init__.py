"""Quantum optimal control: Krotov and gradient optimisers, transport and gate problems."""
from .core import (ControlProblem, ControlSet, OptimizationTrace, fidelity, gradient_optimize, krotov_optimize,
                   krotov_state_to_state, krotov_unitary, phase_fidelity, sin2_shape)
from .dynamics import GridDynamics, MatrixDynamics, two_level_problem
from .lightion import (GATE_LABELS, GATE_SIGNS, LITERATURE_ROTATIONS, GateDynamics, GateModel, SpinorWaveFunction,
                       composite_pulse_gate, composite_sequence, fock_matrix_elements, lamb_dicke_wavenumber,
                       light_ion_apply, light_ion_bounds, light_ion_hamiltonian, phase_controls, pi_half_pulse_map)
from .transport import (TrapTransportSetup, axis_frequency_from_curvature, electrode_potentials_natural,
                        motional_excitation, raised_cosine_path, transport_problem, trap_transport_setup)

__all__ = [
    "ControlProblem", "ControlSet", "OptimizationTrace", "fidelity", "gradient_optimize", "krotov_optimize",
    "krotov_state_to_state", "krotov_unitary", "phase_fidelity", "sin2_shape",
    "GridDynamics", "MatrixDynamics", "two_level_problem",
    "GATE_LABELS", "GATE_SIGNS", "LITERATURE_ROTATIONS", "GateDynamics", "GateModel", "SpinorWaveFunction",
    "composite_pulse_gate", "composite_sequence", "fock_matrix_elements", "lamb_dicke_wavenumber",
    "light_ion_apply", "light_ion_bounds", "light_ion_hamiltonian", "phase_controls", "pi_half_pulse_map",
    "TrapTransportSetup", "axis_frequency_from_curvature", "electrode_potentials_natural", "motional_excitation",
    "raised_cosine_path", "transport_problem", "trap_transport_setup",
]
