"""Exception and warning types shared by all modules."""


class IonToolError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(IonToolError, ValueError):
    """An input violates a documented precondition."""


class ConfigError(InvalidArgumentError):
    """A scenario configuration is malformed (CLI exit code 2)."""


class GeometryError(InvalidArgumentError):
    """Mesh or electrode definition is invalid."""


class DomainError(InvalidArgumentError):
    """A requested position or parameter lies outside the modelled domain."""


class UnstableParametersError(InvalidArgumentError):
    """Mathieu parameters outside the (lowest-order) stable region."""


class AntiTrappingError(InvalidArgumentError):
    """A static potential curvature has the wrong sign to confine the ion."""


class NumericalError(IonToolError, ArithmeticError):
    """A numerical procedure failed (CLI exit code 3)."""


class ConvergenceError(NumericalError):
    """Iterative solver did not reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SolverError(NumericalError):
    """Linear system is singular or too ill-conditioned."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class StepFailure(NumericalError):
    """Implicit integrator stage equations did not converge."""


class StiffnessError(NumericalError):
    """Adaptive step size dropped below the representable minimum."""


class SingularityError(NumericalError):
    """Coincident particles in a pairwise interaction."""


class StepSizeError(NumericalError):
    """Grid spacing too coarse for the Numerov recurrence."""


class NotEnoughStatesError(NumericalError):
    """Eigenvalue scan found fewer roots than requested."""


class NormalizationError(NumericalError):
    """Propagation increased the norm: spectral bounds are wrong."""


class InfeasibleError(NumericalError):
    """No regularisation strength keeps the voltages inside the bounds."""


class DegenerateGuessError(NumericalError):
    """Initial controls give zero overlap with the goal state."""


class TruncationWarning(UserWarning):
    """A series expansion was cut before its terms became negligible."""


class MonotonicityWarning(UserWarning):
    """An optimisation step increased the objective."""
