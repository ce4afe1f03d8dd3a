"""Classical ion dynamics: one-step integrators, trap and Coulomb forces."""
from .analysis import (energy_series, excursion_halves, oscillation_frequency, relative_energy_drift,
                       secular_energy_drift)
from .forces import (coulomb_energy, coulomb_force, harmonic_field, kinetic_energy, mathieu_field, quadrupole_field,
                     relax_to_equilibrium, static_well_field, total_energy)
from .integrators import (STEPPERS, ForceField, PhaseState, Trajectory, integrate_adaptive, integrate_fixed, rk_step,
                          step_euler_explicit, step_implicit_midpoint, step_partitioned_rk, step_rk,
                          step_stormer_verlet)
from .tableaux import DORMAND_PRINCE, EULER, LOBATTO_IIIA_IIIB_3, MIDPOINT, RK4, ButcherTableau, PartitionedTableau

__all__ = [
    "energy_series", "excursion_halves", "oscillation_frequency", "relative_energy_drift", "secular_energy_drift",
    "coulomb_energy", "coulomb_force", "harmonic_field", "kinetic_energy", "mathieu_field", "quadrupole_field",
    "relax_to_equilibrium", "static_well_field", "total_energy",
    "STEPPERS", "ForceField", "PhaseState", "Trajectory", "integrate_adaptive", "integrate_fixed", "rk_step",
    "step_euler_explicit", "step_implicit_midpoint", "step_partitioned_rk", "step_rk", "step_stormer_verlet",
    "DORMAND_PRINCE", "EULER", "LOBATTO_IIIA_IIIB_3", "MIDPOINT", "RK4", "ButcherTableau", "PartitionedTableau",
]
