"""Grid quantum dynamics for one motional coordinate: eigenstates and propagation."""
from .fourier import (EigenSolution, GridHamiltonian, apply_kinetic, eigenstates, hamiltonian_matrix,
                      kinetic_matrix, kinetic_spectrum, spectral_bounds)
from .grid import SpatialGrid, WaveFunction, gaussian, harmonic_ground_state, normalize, optimal_grid_points
from .numerov import numerov_eigenvalues, numerov_integrate, numerov_state
from .propagate import (bessel_j, chebyshev_coefficients, chebyshev_step, grid_hamiltonian, propagate_chebyshev,
                        propagate_split_operator)

__all__ = [
    "EigenSolution", "GridHamiltonian", "apply_kinetic", "eigenstates", "hamiltonian_matrix", "kinetic_matrix",
    "kinetic_spectrum", "spectral_bounds",
    "SpatialGrid", "WaveFunction", "gaussian", "harmonic_ground_state", "normalize", "optimal_grid_points",
    "numerov_eigenvalues", "numerov_integrate", "numerov_state",
    "bessel_j", "chebyshev_coefficients", "chebyshev_step", "grid_hamiltonian", "propagate_chebyshev",
    "propagate_split_operator",
]
