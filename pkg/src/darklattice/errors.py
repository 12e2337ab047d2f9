"""Exception types raised across the package."""


class DarkLatticeError(Exception):
    """Base class for all package errors."""


class InvalidInputError(DarkLatticeError, ValueError):
    pass


class DomainError(DarkLatticeError, ValueError):
    """Argument outside the domain of a formula (e.g. r = 0 in the Green's tensor)."""


class ConsistencyError(DarkLatticeError, RuntimeError):
    """An internal invariant was violated (e.g. a detuning with imaginary residue)."""


class InstabilityError(DarkLatticeError, RuntimeError):
    """Integrator norm grew beyond tolerance; the step size is too large."""


class DegenerateConfigurationError(DarkLatticeError, ValueError):
    pass


class InfeasibleTargetError(DarkLatticeError, ValueError):
    """A requested photon shape releases more excitation than is stored."""


class TruncatedTransformError(DarkLatticeError, RuntimeError):
    """Trajectory has not decayed enough for a Laplace transform to be meaningful."""
