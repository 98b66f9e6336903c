"""Exception types shared across the package."""


class HamlabError(Exception):
    """Base class for all package errors."""


class StructuralError(HamlabError):
    """A structural matrix (symplectic form, projector) is singular or malformed."""


class DomainError(HamlabError):
    """A phase point lies outside the validity domain of its chart."""


class StiffnessError(HamlabError):
    """The integrator step size underflowed."""


class AccuracyError(HamlabError):
    """A computed quantity missed its accuracy target (often fixable with a finer grid)."""


class RegularityError(HamlabError):
    """The canonical form of a curve degenerated; carries the offending time."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class TransversalityError(HamlabError):
    """A required transversality condition failed (critical point, tangency)."""


class ConjugatePointError(HamlabError):
    """A conjugate time was found where none is allowed; carries the time."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ConvergenceError(HamlabError):
    """An iterative limit failed to converge within its horizon budget."""


class OverflowGuardError(HamlabError):
    """Fundamental solutions grew past the floating-point range before convergence."""


class ConfigError(HamlabError):
    """Invalid run configuration."""
