"""Exception hierarchy shared by the simulator modules."""


class MirrorLambError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MirrorLambError, ValueError):
    """Invalid or inconsistent configuration."""


class DomainError(MirrorLambError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ResolutionError(MirrorLambError, ValueError):
    """Sampling grid too coarse for the requested operation."""


class ValidityError(MirrorLambError, ValueError):
    """An asymptotic expansion is used outside its range of validity."""


class ClassificationError(MirrorLambError, ValueError):
    """A qubit position is not on the node/antinode grid."""


class SolverError(MirrorLambError, RuntimeError):
    """Numerical solver failure."""


class DegeneracyError(SolverError):
    """The generator has a kernel of dimension other than one."""

    def __init__(self, kernel_dim, message=None):
        self.kernel_dim = kernel_dim
        super().__init__(message or f"steady state is not unique: kernel dimension {kernel_dim}")


class SingularityError(SolverError):
    """Weak-field linear system is singular."""


class StiffnessError(SolverError):
    """Adaptive integrator step size underflowed."""
